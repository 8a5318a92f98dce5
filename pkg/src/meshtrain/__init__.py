"""meshtrain: a deterministic decentralized-training-network core.

Library + simulator + CLI covering specialist merging with an outer
Nesterov optimizer, Reed-Solomon erasure-coded storage with health
monitoring, signed node identity, an epoch reward ledger with
commit-reveal and slashing, ternary quantization, and a desk-scale
autonomous research loop — all verifiable over a simulated network.
"""

__version__ = "0.1.0"
