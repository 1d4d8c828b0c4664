"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``PRIMECOUPLING_PURE=1`` forces the pure-Python fallback.  Both
backends consume random numbers identically.
"""
import os

from . import _kernels_py as pure

compiled = None
if os.environ.get("PRIMECOUPLING_PURE") != "1":
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled = None

BACKEND = "cython" if compiled is not None else "python"
_impl = compiled if compiled is not None else pure


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None for default)."""
    if name is None:
        return _impl
    if name == "python":
        return pure
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def smallest_prime_factors(limit):
    return _impl.smallest_prime_factors(limit)


def feller_batch(gen, trials, n, horizon, backend=None):
    return get_backend(backend).feller_batch(gen, trials, n, horizon)


def grow_batch(gen, trials, n, primes, log_primes, split, xs, ys, ds, spf, bvec, gcum,
               backend=None):
    return get_backend(backend).grow_batch(gen, trials, n, primes, log_primes, split,
                                           xs, ys, ds, spf, bvec, gcum)
