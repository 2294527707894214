"""Behavioral simulator for domain-wall MTJ spiking neurons, synapses, and crossbar networks."""

__version__ = "0.1.0"
