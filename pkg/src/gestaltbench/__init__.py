"""gestaltbench: deterministic benchmark generator for Gestalt visual concepts.

Binary image classification tasks (global/local mirror symmetry, counting,
type counting, common fate) with pixel-exact ground truth, independent
oracles, a small reference CNN learner, and a trial protocol service.
"""

__version__ = "0.1.0"

from .errors import GestaltError

__all__ = ["GestaltError", "__version__"]
