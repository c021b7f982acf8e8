"""Toolkit for compiling degree-bounded minimum spanning tree problems to
QUBO/Ising form, embedding them on annealer hardware graphs, sampling them
classically, simulating small annealing spectra and computing success and
time-to-solution metrics."""

__version__ = "0.1.0"
