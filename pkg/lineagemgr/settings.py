# Merge default settings and local settings without creating an import loop
# if local_settings wants to imports default_settings
from .default_settings import *

try:
    from .local_settings import *
except ImportError:
    # Local settings are optional for an offline pipeline
    pass
