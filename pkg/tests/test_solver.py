import numpy as np
import pytest

from svtv.cp import (
    ChambollePock,
    GapVariant,
    ProxVariant,
    SolverConfig,
    SolverState,
    cp_solve,
    primal_dual_gap,
    prox_f1_star,
    prox_f2_star,
)
from svtv.errors import ShapeError, SolverError
from svtv.operators import (
    build_projector,
    gradient_operator,
    identity,
    parallel_geometry,
)
from svtv.oracle import oracle_solve
from svtv.problem import WeightedTVProblem, objective
from svtv.solver import Status, TRACE_COLUMNS
from svtv.theory import is_nonincreasing


def generate_data_tv(side, n_angles, n_detectors, lam, seed, weighted=False):
    """Generate a weighted TV problem of the form:

    min 1/2 ||Kx - y||^2 + lam ||w * |Dx| ||_1
    s.t x >= 0

    with a Siddon projector K, a random nonnegative image behind y and
    random weights in (0, 1] when `weighted`.
    """

    rng = np.random.default_rng(seed)
    K = build_projector(parallel_geometry(side, n_angles, n_detectors))
    x_gt = rng.random(side * side)
    y = K.forward(x_gt) + 0.01 * rng.standard_normal(K.n_rows)
    w = 1.0 - rng.random(side * side) if weighted else None
    return WeightedTVProblem(K, y, (side, side), w, lam)


def solve_tv_cp(problem, max_iter):
    config = SolverConfig(lam=problem.lam, max_iter=max_iter, eps_J=0.0, eps_x=0.0)
    return ChambollePock(config).solve(problem)


@pytest.mark.parametrize("seed", range(5))
def test_cp_oracle(seed):

    problem = generate_data_tv(5, 3, 5, 0.1, seed, weighted=seed % 2 == 1)
    result = solve_tv_cp(problem, 20000)
    _, value = oracle_solve(problem)

    error = np.abs(result.objective_value - value) / max(1.0, abs(value))
    assert error < 1e-4, error


def test_cp_oracle_six_rays():

    # 4x4 image seen by 2 angles of 3 detector cells
    problem = generate_data_tv(4, 2, 3, 0.1, 0)
    assert problem.K.n_rows == 6
    result = solve_tv_cp(problem, 20000)
    _, value = oracle_solve(problem)

    error = np.abs(result.objective_value - value) / max(1.0, abs(value))
    assert error < 1e-5, error
    assert np.all(result.solution >= 0.0)


def test_prox_f1_star():
    y = np.array([1.0, -2.0, 0.5])
    for variant in ProxVariant:
        assert np.all(prox_f1_star(0.5 * y, y, 0.5, variant) == 0.0)

    four = np.array([4.0])
    assert prox_f1_star(four, np.zeros(1), 1.0, "scaled")[0] == 1.0
    assert prox_f1_star(four, np.zeros(1), 1.0, "textbook")[0] == 2.0


def test_moreau_identity():
    # prox of sigma F1* plus sigma times prox of F1 / sigma at p / sigma gives p
    rng = np.random.default_rng(0)
    p, y = rng.standard_normal(1000), rng.standard_normal(1000)
    for sigma in [0.1, 1.0, 7.0]:
        primal = (y + p) / (1.0 + sigma)
        total = prox_f1_star(p, y, sigma) + sigma * primal
        error = np.max(np.abs(total - p))
        assert error < 1e-10, error


def test_prox_f2_star():
    q = np.array([3.0, 4.0])
    assert np.allclose(prox_f2_star(q, np.ones(1), 1.0), [0.6, 0.8])

    rng = np.random.default_rng(0)
    w = 1.0 - rng.random(20)
    q = 0.1 * rng.standard_normal(40)
    inside = prox_f2_star(q, w, 10.0)
    assert np.array_equal(inside, q)

    w = 1.0 - rng.random(10000)
    projected = prox_f2_star(10.0 * rng.standard_normal(20000), w, 0.5)
    radius = np.hypot(projected[:10000], projected[10000:])
    excess = np.max(radius - 0.5 * w)
    assert excess <= 1e-15, excess

    assert np.all(prox_f2_star(q, w[:20], 0.0) == 0.0)


def test_identity_least_squares():
    # lam = 0 and K = I: the solution is y itself
    rng = np.random.default_rng(0)
    y = rng.random(16)
    cfg = SolverConfig(lam=0.0, max_iter=2000, eps_J=0.0, eps_x=0.0)
    x, trace = cp_solve(identity(16), y, None, cfg, shape=(4, 4))
    error = np.max(np.abs(x - y))
    assert error < 1e-6, error
    assert trace.termination == Status.ITER_LIMIT
    assert len(trace) == 2000


def test_unit_weights_match_global_tv():
    problem = generate_data_tv(6, 4, 9, 0.5, 0)
    cfg = SolverConfig(lam=0.5, max_iter=200)
    x_none, trace_none = cp_solve(problem.K, problem.y_delta, None, cfg)
    x_ones, trace_ones = cp_solve(problem.K, problem.y_delta, np.ones(36), cfg)
    assert np.array_equal(x_none, x_ones)
    assert trace_none.column("objective") == trace_ones.column("objective")

    result = ChambollePock(cfg).solve(problem.with_weights(np.ones(36)))
    assert np.array_equal(result.solution, x_ones)


def test_determinism():
    problem = generate_data_tv(6, 4, 9, 0.5, 1, weighted=True)
    cfg = SolverConfig(lam=0.5, max_iter=100)
    first = ChambollePock(cfg).solve(problem)
    second = ChambollePock(cfg).solve(problem)
    assert np.array_equal(first.solution, second.solution)
    for key in TRACE_COLUMNS[:-1]:
        assert first.trace.column(key) == second.trace.column(key)


def test_objective_decreases():
    problem = generate_data_tv(8, 6, 12, 0.2, 2)
    result = solve_tv_cp(problem, 500)
    values = result.trace.column("objective")
    assert values[-1] < values[0]
    assert abs(values[-1] - problem.value(result.solution)) < 1e-12


def test_stopping_criteria():
    problem = generate_data_tv(5, 3, 5, 0.1, 0)

    result = ChambollePock(SolverConfig(lam=0.1, max_iter=7)).solve(problem)
    assert result.status == Status.ITER_LIMIT
    assert result.iterations == 7 and len(result.trace) == 7

    cfg = SolverConfig(lam=0.1, max_iter=100000, eps_J=0.0, eps_x=1e-6)
    result = ChambollePock(cfg).solve(problem)
    assert result.status == Status.REL_CHANGE
    last = result.trace.records[-1]
    assert last["rel_change"] <= 1e-6


def test_non_finite_iterate():
    problem = generate_data_tv(4, 2, 6, 0.1, 0)
    problem.y_delta = np.full(problem.K.n_rows, np.nan)
    with pytest.raises(SolverError) as info:
        ChambollePock(SolverConfig(lam=0.1, max_iter=10)).solve(problem)
    assert info.value.trace.termination == Status.ERROR
    assert len(info.value.trace) == 1


def test_gap_perfect_pair():
    rng = np.random.default_rng(0)
    y = rng.random(9)
    problem = WeightedTVProblem(identity(9), y, (3, 3), lam=0.0)
    state = SolverState(x=y.copy(), x_bar=y.copy(), p=np.zeros(9), q=np.zeros(18))
    for variant in GapVariant:
        assert primal_dual_gap(state, problem, variant) == 0.0


def test_gap_infeasible_dual():
    problem = generate_data_tv(4, 2, 6, 0.1, 0)
    state = SolverState.initial(problem)
    state.q = 100.0 * np.ones(32)
    assert primal_dual_gap(state, problem) == np.inf

    # The solver keeps running on an infinite gap
    result = solve_tv_cp(problem, 50)
    assert result.iterations == 50


def test_gap_at_oracle_optimum():
    problem = generate_data_tv(5, 3, 5, 0.1, 0)
    result = solve_tv_cp(problem, 20000)
    _, value = oracle_solve(problem)
    error = np.abs(result.objective_value - value) / max(1.0, abs(value))
    assert error < 1e-4, error

    gap = result.trace.records[-1]["pdg"]
    assert gap <= 1e-4 * (1.0 + abs(value)), gap


def test_gap_trend():
    # Gaps under 1e-12 sit at the rounding floor of the objective values
    problem = generate_data_tv(5, 3, 5, 0.1, 1)
    result = solve_tv_cp(problem, 20000)
    gaps = result.trace.column("pdg")
    checkpoints = [10 * j for j in (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000)]
    values = [max(gaps[k - 1], 1e-12) for k in checkpoints]
    assert is_nonincreasing(values, slack=0.1), values
    assert np.isfinite(values[-1]), values


def test_initial_state():
    problem = generate_data_tv(4, 2, 6, 0.1, 0)
    state = SolverState.initial(problem, -np.ones(16))
    assert np.all(state.x == 0.0) and state.k == 0
    with pytest.raises(ShapeError):
        SolverState.initial(problem, np.ones(15))


def test_objective_dense():
    rng = np.random.default_rng(3)
    problem = generate_data_tv(5, 4, 8, 0.3, 3, weighted=True)
    x = rng.random(25)
    total, fit, reg = objective(
        x, problem.y_delta, problem.K, problem.w, 0.3, (5, 5)
    )

    Kd = problem.K.to_dense()
    Dd = gradient_operator((5, 5)).to_dense()
    g = Dd @ x
    fit_dense = 0.5 * np.sum((Kd @ x - problem.y_delta) ** 2)
    reg_dense = 0.3 * np.sum(problem.w * np.sqrt(g[:25] ** 2 + g[25:] ** 2))
    assert abs(fit - fit_dense) < 1e-12 * max(1.0, fit_dense)
    assert abs(reg - reg_dense) < 1e-12 * max(1.0, reg_dense)
    assert total == fit + reg

    y_zero = np.zeros(problem.K.n_rows)
    zero = objective(np.zeros(25), y_zero, problem.K, problem.w, 1.0, (5, 5))
    assert zero == (0.0, 0.0, 0.0)
    assert problem.value(-np.ones(25)) == np.inf


def test_problem_validation():
    K = identity(9)
    with pytest.raises(ShapeError):
        WeightedTVProblem(K, np.zeros(8), (3, 3))
    with pytest.raises(ShapeError):
        WeightedTVProblem(K, np.zeros(9), (3, 3), w=np.ones(4))
    with pytest.raises(ValueError):
        WeightedTVProblem(K, np.zeros(9), (3, 3), lam=-1.0)


def test_trace_csv(tmp_path):
    problem = generate_data_tv(4, 2, 6, 0.1, 0)
    result = ChambollePock(SolverConfig(lam=0.1, max_iter=3)).solve(
        problem, reference=np.ones(16)
    )
    assert all("re" in record for record in result.trace.records)

    path = tmp_path / "trace.csv"
    result.trace.write_csv(path, with_time=False)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS[:-1])
    assert len(lines) == 4
    assert lines[1].startswith("1,")
