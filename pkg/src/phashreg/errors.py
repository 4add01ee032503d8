"""Exception types shared across the package."""


class RegistryError(Exception):
    """Base class for all registry failures."""


class InvalidImageError(RegistryError):
    """Input could not be decoded into a usable raster image."""


class IntegrityError(RegistryError):
    """Stored state disagrees with its cryptographic commitment."""


class StorageError(RegistryError):
    """A durable write failed; the operation was rolled back."""


class NotFoundError(RegistryError):
    """The requested key is not present in the structure."""
