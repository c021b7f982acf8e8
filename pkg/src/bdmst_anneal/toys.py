"""Canonical small embedded models used by demos and acceptance checks."""

from __future__ import annotations

from .embedding import EmbeddedIsing, Embedding, embed_ising
from .hardware import chimera_graph
from .ising import IsingModel

TRIANGLE_EDGES = [(0, 1), (0, 2), (1, 2)]


def triangle_logical() -> IsingModel:
    """Antiferromagnetic triangle with small symmetry-breaking fields.

    The fields make the classical ground state unique so the minimal gap
    sits mid-anneal; with all-equal couplings and no fields the classical
    ground manifold is six-fold degenerate and the gap minimum collapses
    onto the very end of the anneal, where it no longer responds to the
    chain strength.
    """
    return IsingModel(3, {0: 0.2, 1: 0.4, 2: 0.6}, {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})


def triangle_embedding() -> Embedding:
    """The 3-vertex complete graph is not native to a bipartite cell, so one
    vertex becomes a 2-qubit chain: 4 physical qubits on one unit cell."""
    return Embedding(chains=((0,), (2, 4), (6,)), hardware=chimera_graph(1, 1, 4))


def triangle_toy(j_ferro: float = 2.0) -> EmbeddedIsing:
    return embed_ising(
        triangle_logical(), triangle_embedding(), j_ferro, enforce_hardware_range=False
    )


# pause-model calibration for the triangle toy: temperature about 1.5x the
# minimal gap at chain strength 2, relaxation fast enough to thermalize near
# the gap minimum yet frozen once the transverse field dies out
TOY_TEMPERATURE = 0.2985
TOY_GAMMA0 = 30.0
TOY_PAUSE_LENGTH = 10.0
