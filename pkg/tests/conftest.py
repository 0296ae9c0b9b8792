import numpy as np
import pytest

from staralg import BlockPSD, FunctionalGenerated, StarAlgebra
from staralg.functionals import evaluation


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def simplex(n):
    alg = StarAlgebra.pointwise(n)
    return alg, FunctionalGenerated(alg, [evaluation(alg, i) for i in range(n)])


def psd(sizes):
    alg = StarAlgebra.blocks(sizes)
    return alg, BlockPSD(alg)


def matrix_unit(alg, block, i, j):
    """E_ij inside block ``block`` of a block algebra."""
    mats = [np.zeros((s, s), dtype=complex) for s in alg.block_tag]
    mats[block][i, j] = 1
    return alg.from_blocks(mats)


ACCEPTANCE_LINES = []


def record(criterion: int, ok: bool | None, detail: str) -> bool | None:
    """Log one acceptance verdict (``None`` for a note); repeated in the summary."""
    verdict = "INFO" if ok is None else ("PASS" if ok else "FAIL")
    line = f"criterion {criterion:2d}: {verdict}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
