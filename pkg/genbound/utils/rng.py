"""Counter-based random streams.

Every stream is a Philox generator whose 128-bit key is derived from
(seed, scenario id, stream name). Streams never share state, so the order
in which parallel work runs cannot change any draw.
"""

import hashlib

import numpy as np


def stream_key(seed: int, scenario_id: str, name: str) -> int:
    digest = hashlib.blake2b(f"{seed}|{scenario_id}|{name}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, scenario_id: str, name: str) -> np.random.Generator:
    """Independent generator for one named stream."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, scenario_id, name)))
