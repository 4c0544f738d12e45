import pytest

from rtmixed.problems import BUILTIN_EXAMPLES
from rtmixed.timestepper import RunConfig, run


@pytest.fixture(scope="session")
def scheme_runs():
    """Session cache of scheme runs keyed by configuration.

    The acceptance criteria reuse several expensive runs (the r=1 coupled-tau
    series feeds both the convergence table and the embedding study).
    """
    cache = {}

    def get(example, M, r, tau, T=1.0):
        key = (example, M, r, round(tau, 15), T)
        if key not in cache:
            exact, fspec, dim = BUILTIN_EXAMPLES[example]()
            config = RunConfig(
                dim=dim, M=M, r=r, tau=tau, T=T,
                nonlinearity=fspec, exact=exact, label=example,
            )
            cache[key] = run(config)
        return cache[key]

    return get
