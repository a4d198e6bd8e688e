"""Supply-chain random network simulator: topology, allocation and agility (OFR)."""

__version__ = "0.1.0"
