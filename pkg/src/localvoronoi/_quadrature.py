from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

NODE_QUANTUM = 32


def quantize_nodes(n):
    n = int(n)
    return max(NODE_QUANTUM, -(-n // NODE_QUANTUM) * NODE_QUANTUM)


@lru_cache(maxsize=256)
def _gauss_legendre(n):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1], cached by (quantized) size."""
    return _gauss_legendre(quantize_nodes(n))
