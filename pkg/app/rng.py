"""
Labelled random streams.

Every random draw in a run comes from a stream derived purely from the master
seed and a label tuple such as ("exp1", 7, "O") or ("exp1", 7, "observer-aux", -3).
Derivation goes through `numpy.random.SeedSequence` with the label encoded in
the spawn key, so streams with different labels are independent and no
stream depends on scheduling or worker count.
"""

from __future__ import annotations

import hashlib
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

Label = str | int

STREAM_ROLES = (
    "rep", "jumps", "O", "V", "U", "init", "burn-in", "observer-aux",
    "rep-restart", "jumps-restart", "O-restart", "V-restart", "U-restart",
)

_WORD = (1 << 32) - 1

# First word of every encoded label; each label takes exactly three 32-bit words.
_TAG_INT = 1
_TAG_NEGATIVE_INT = 2
_TAG_STR = 3


def _encode(label: Label) -> tuple[int, int, int]:
    """Fixed-width encoding of one label: (tag, low 32 bits, high 32 bits)."""
    if isinstance(label, bool):
        raise TypeError("boolean stream labels are ambiguous")
    if isinstance(label, (int, np.integer)):
        value = int(label)
        tag = _TAG_INT if value >= 0 else _TAG_NEGATIVE_INT
        value = abs(value)
        if value >= 1 << 64:
            raise ValueError("integer stream labels must fit in 64 bits")
    elif isinstance(label, str):
        tag = _TAG_STR
        value = int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "big")
    else:
        raise TypeError(f"stream label must be str or int, got {type(label).__name__}")
    return tag, value & _WORD, value >> 32


@dataclass(frozen=True)
class RngPolicy:
    master_seed: int
    experiment: str = "default"

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")


def spawn_key(labels: Sequence[Label]) -> tuple[int, ...]:
    return tuple(word for label in labels for word in _encode(label))


def derive_stream(policy: RngPolicy, labels: Sequence[Label]) -> np.random.Generator:
    """Generator for the label tuple; a pure function of (master seed, labels)."""
    sequence = np.random.SeedSequence(entropy=policy.master_seed, spawn_key=spawn_key(labels))
    return np.random.Generator(np.random.PCG64(sequence))


@dataclass
class ReplicaStreams:
    """Streams of one replica, labelled (experiment, replica index, role, *extra)."""

    policy: RngPolicy
    index: int
    used: list[tuple[Label, ...]] = field(default_factory=list)

    def get(self, role: str, *extra: Label) -> np.random.Generator:
        label = (role, *extra)
        if label not in self.used:
            self.used.append(label)
        return derive_stream(self.policy, (self.policy.experiment, self.index, *label))

    def factory(self, role: str):
        """Callable i -> stream (role, i), for lazily sampled auxiliary processes."""
        return lambda i: self.get(role, i)

    def driver_streams(
        self, restart: bool = False, single: bool = False, extra: tuple[Label, ...] = ()
    ) -> dict[str, np.random.Generator]:
        suffix = "-restart" if restart else ""
        streams = {
            "jumps": self.get("jumps" + suffix, *extra),
            "O": self.get("O" + suffix, *extra),
            "V": self.get("V" + suffix, *extra),
        }
        if single:
            streams["U"] = self.get("U" + suffix, *extra)
        return streams


def label_scheme(policy: RngPolicy) -> dict:
    """How stream labels are formed; recorded in every manifest."""
    return {
        "master_seed": policy.master_seed,
        "experiment": policy.experiment,
        "label": "(experiment, replica, role, *extra)",
        "derivation": "SeedSequence(entropy=master_seed, spawn_key=encode(label)); PCG64",
        "encoding": "per label three uint32 words (tag, low, high); int tag 1 (2 if negative), "
                    "str tag 3 with the 64-bit blake2b digest",
    }
