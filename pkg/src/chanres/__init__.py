"""Resource measures, one-shot rate brackets and property checks for quantum channels."""

from .config import Settings, settings
from .core import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .fileio import channel_from_dict, channel_to_dict, load_channel, save_channel
from .monotones import *  # noqa: F401,F403
from .rates import *  # noqa: F401,F403
from .superchannels import *  # noqa: F401,F403
from .theories import *  # noqa: F401,F403
from .theories import target_matrices
from .verify import *  # noqa: F401,F403

__version__ = "0.1.0"
