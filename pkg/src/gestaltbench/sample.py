"""The labeled-sample record shared by every generator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Sample:
    """One labeled image plus the provenance needed to re-derive it.

    label: 0 = concept holds (symmetric / three objects / one kind /
    all facing), 1 = violated. The recipe holds every random draw the
    generator made; (task, round, seed) alone regenerate the image.
    """

    image: np.ndarray
    label: int
    task: str
    round: str
    seed: int
    recipe: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
