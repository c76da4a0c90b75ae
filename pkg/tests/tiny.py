"""Enumeration of instances small enough for the brute-force oracle."""

from seccache.errors import InvalidParams
from seccache.experiments import minimal_field
from seccache.scheme import derive_params, reduce_q, t_max
from seccache.security import MAX_ORACLE_BITS, oracle_random_bits


def _fits(params):
    return oracle_random_bits(params) <= MAX_ORACLE_BITS


def tiny_instances(max_k=4, max_n=3):
    """Yield ``(label, params, dropped_ekeys)`` for every honest instance and
    every applicable mutation whose realisations fit the oracle budget."""
    for k in range(2, max_k + 1):
        for l in range(1, k):
            for t in range(t_max(k, l) + 1):
                for n in range(1, max_n + 1):
                    probe = derive_params(n, k, l, t, 1, pad=True)
                    spec = minimal_field(probe.g)
                    params = derive_params(n, k, l, t, probe.p * spec.m, spec=spec)
                    if not _fits(params):
                        continue
                    tag = f"N{n}K{k}l{l}t{t}"
                    yield tag, params, ()
                    if n >= 2 and t + 1 <= k - l:
                        yield tag + "-drop", params, (params.plus_subsets[-1],)
                    try:
                        weak = reduce_q(params)
                    except InvalidParams:
                        continue
                    if _fits(weak):
                        yield tag + "-reduceq", weak, ()
