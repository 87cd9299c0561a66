"""Shared fixtures: synthetic books with exact ground truth."""

import pytest

import synth
from bookseg.profiles import save_profile


@pytest.fixture(scope="session")
def book20(tmp_path_factory):
    """A 20-page synthetic book with its tuned profile saved alongside.

    Session-scoped and treated as read-only; tests that mutate book state
    (edit logs, profile writes) must use `small_book` or their own copy.
    """
    book = tmp_path_factory.mktemp("books") / "liber"
    gt = synth.write_book(book, n_pages=20)
    save_profile(synth.tuned_profile(), book / "larex-profile.json")
    return book, gt


@pytest.fixture()
def small_book(tmp_path):
    """A private 3-page book for tests that write edit logs or profiles."""
    book = tmp_path / "libellus"
    gt = synth.write_book(book, n_pages=3, seed=11)
    save_profile(synth.tuned_profile(), book / "larex-profile.json")
    return book, gt


@pytest.fixture(scope="session")
def page_plain():
    """(image, ground truth) for a page without an image block."""
    return synth.make_page(1)


@pytest.fixture(scope="session")
def page_with_image():
    """(image, ground truth) for a page with an image block."""
    return synth.make_page(0)
