import random
from typing import Sequence, Union

import numpy as np
import torch

# Purpose tags keep the generator streams of different stages apart
STREAM_TOY_INSTANCE = 11
STREAM_TOY_CORRUPTION = 12
STREAM_PRETRAIN_EPOCH = 21
STREAM_TRANSFER_EPOCH = 31
STREAM_COMPARE = 41


def set_seed(seed: int):
    """Seed python, numpy and torch global generators"""
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)


def derive_rng(seed: int, *keys: Union[int, Sequence[int]]) -> np.random.Generator:
    """Independent generator for (seed, keys...), insensitive to call order"""
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seeds(master_seed: int, count: int) -> list:
    """Reproducible list of child seeds from a master seed"""
    state = np.random.SeedSequence([int(master_seed), STREAM_COMPARE]).generate_state(count)
    return [int(s % (2 ** 31 - 1)) for s in state]
