"""One-parameter billiard deformations ``alpha -> K(alpha)``, ``alpha in [0, b]``.

Each rule is polynomial or trigonometric in ``alpha`` (translation along a
fixed vector, radius scaling by ``1 + rate * alpha``, rotation of the body
axes in a fixed coordinate plane), so every family is smooth in ``alpha``
to all orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import Obstacle
from .scene import Scene, check_no_eclipse

RULES = ("translate", "scale", "rotate", "identity")


@dataclass(frozen=True, eq=False)
class DeformationRule:
    target: int                      # 0-based obstacle index
    rule: str
    vector: tuple | None = None      # translate: displacement per unit alpha
    plane: tuple = (0, 1)            # rotate: coordinate plane of the rotation
    rate: float = 1.0                # scale/rotate: multiplier on alpha

    def __post_init__(self):
        if self.rule not in RULES:
            raise DomainError(f"unknown deformation rule {self.rule!r}; expected one of {RULES}")
        if self.rule == "translate" and self.vector is None:
            raise DomainError("translate rule needs a vector")
        if self.rule == "rotate" and (len(self.plane) != 2 or self.plane[0] == self.plane[1]):
            raise DomainError("rotate rule needs two distinct plane axes")

    def apply(self, ob: Obstacle, alpha: float) -> Obstacle:
        if self.rule == "identity" or alpha == 0:
            return ob
        if self.rule == "translate":
            vec = np.asarray(self.vector, dtype=float)
            if vec.shape != ob.center.shape:
                raise DomainError("translation vector has the wrong dimension")
            return Obstacle(ob.kind, ob.center + alpha * vec, ob.radii, ob.orientation)
        if self.rule == "scale":
            factor = 1 + self.rate * alpha
            if factor <= 0:
                raise DomainError("scale rule collapses the obstacle")
            return Obstacle(ob.kind, ob.center, ob.radii * factor, ob.orientation)
        i, j = self.plane
        n = ob.dimension
        if not (0 <= i < n and 0 <= j < n):
            raise DomainError("rotation plane outside the ambient dimension")
        theta = self.rate * alpha
        rot = np.eye(n)
        rot[i, i] = rot[j, j] = math.cos(theta)
        rot[j, i] = math.sin(theta)
        rot[i, j] = -math.sin(theta)
        return Obstacle(ob.kind, ob.center, ob.radii, rot @ ob.orientation)


@dataclass(frozen=True, eq=False)
class DeformationFamily:
    base: Scene
    rules: tuple = field(default_factory=tuple)
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.b > 0:
            raise DomainError("deformation interval [0, b] needs b > 0")
        for r in self.rules:
            if not 0 <= r.target < len(self.base):
                raise DomainError(f"deformation targets missing obstacle {r.target + 1}")

    def _check_alpha(self, alpha):
        if not 0 <= alpha <= self.b:
            raise DomainError(f"alpha={alpha} outside [0, {self.b}]")

    def obstacle_at(self, index: int, alpha: float) -> Obstacle:
        self._check_alpha(alpha)
        ob = self.base[index]
        for r in self.rules:
            if r.target == index:
                ob = r.apply(ob, alpha)
        return ob

    def scene_at(self, alpha: float) -> Scene:
        self._check_alpha(alpha)
        if alpha == 0:
            return self.base
        return Scene(tuple(self.obstacle_at(i, alpha) for i in range(len(self.base))))

    def validate(self, samples: int = 11) -> None:
        """Check disjointness and condition (H) on a uniform grid over ``[0, b]``."""
        for alpha in np.linspace(0, self.b, samples):
            scene = self.scene_at(float(alpha))   # Scene() enforces disjointness
            report = check_no_eclipse(scene)
            if not report.holds:
                raise DomainError(f"alpha={alpha:g}: {report.describe()}")

    @property
    def is_constant(self) -> bool:
        return all(r.rule == "identity" for r in self.rules)


def obstacle_at(family: DeformationFamily, index: int, alpha: float) -> Obstacle:
    return family.obstacle_at(index, alpha)
