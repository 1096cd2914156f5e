"""Selective homomorphic encryption for federated learning.

Layers a Paillier-encrypted weight partition with Laplace-noised, bit-scrambled
plaintext blocks so a server can aggregate model updates without decrypting
anything, plus the attack and security-test tooling to measure what that buys.
"""

__version__ = "0.1.0"
