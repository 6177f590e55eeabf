import math

import pytest

from rblab.core import Constraint, Instance, RBParams, Variant

ACCEPTANCE_LINES: dict[int, str] = {}


def make_instance(n, d, constraints, k=2):
    """Wrap hand-built constraints in an Instance with matching parameters.

    Equal permitted sizes give an original-variant instance; otherwise the
    symmetric tag is used, which skips the per-constraint size check.
    """
    cs = [c if isinstance(c, Constraint) else Constraint(*c) for c in constraints]
    m = len(cs)
    alpha = math.log(d) / math.log(n)
    r = m / (n * math.log(d))
    sizes = {len(c.permitted) for c in cs}
    total = d**k
    if len(sizes) == 1 and 1 <= next(iter(sizes)) <= total - 1:
        p = 1 - next(iter(sizes)) / total
        params = RBParams(n, alpha, k, p, r)
        if params.t == next(iter(sizes)):
            return Instance(params, tuple(cs), Variant.ORIGINAL)
    params = RBParams(n, alpha, k, 0.5, r)
    return Instance(params, tuple(cs), Variant.SYMMETRIC)


@pytest.fixture
def build():
    return make_instance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[cid])
