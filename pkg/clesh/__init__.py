from .pipeline import clesh
from .report import TOOL_VERSION as __version__

__all__ = ["clesh", "__version__"]
