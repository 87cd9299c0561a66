"""Exception types shared across the package."""


class BooksegError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(BooksegError):
    """Raised for malformed inputs: empty rasters, bad geometry, bad parameters."""


class ProfileError(BooksegError):
    """Raised when a segmentation profile fails validation."""


class NotFoundError(BooksegError):
    """Raised when a book, page, region or line cannot be resolved."""


class ReplayError(BooksegError):
    """Raised when an edit log cannot be replayed against a segmentation."""
