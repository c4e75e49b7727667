"""Event-driven dynamics of two congruent convex hard particles in the plane.

The package computes the distance of closest approach and contact data for a
pair of congruent strictly convex bodies, builds the orthonormal conservation
frame in velocity space, constructs the families of momentum- and energy-
conserving collision maps, runs event-driven simulations with a conservation
ledger, and probes collision invariants by Monte Carlo. The `hardpair` CLI
exposes all of it behind JSON configs with deterministic seeding.
"""

from hardpair._kernel import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
