import pytest

from fas import paillier


@pytest.fixture(scope="session")
def toy_keys():
    """p=5, q=7 keypair: n=35, g=36, lambda=12, mu=3 (hand-checked)."""
    return paillier.keypair_from_primes(5, 7)


@pytest.fixture(scope="session")
def keys_256():
    return paillier.keygen(256, rng_seed=11)


@pytest.fixture(scope="session")
def keys_2048():
    return paillier.keygen(2048, rng_seed=7)
