from .loader import ConfigLoader, ConfigLoaderError

__all__ = ["ConfigLoader", "ConfigLoaderError"]
