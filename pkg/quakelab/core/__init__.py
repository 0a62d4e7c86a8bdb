from quakelab.core.config import RunConfig, Settings, settings
from quakelab.core.errors import QuakelabError, exit_code_for

__all__ = ["RunConfig", "Settings", "settings", "QuakelabError", "exit_code_for"]
