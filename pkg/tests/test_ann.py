"""Neural surrogate: forward pass, gradients, regularized training, metrics."""

import numpy as np
import pytest

from discflex import rsm
from discflex.ann import (
    NetworkParams,
    NetworkShape,
    TrainConfig,
    TrainingDivergenceError,
    forward,
    gradient,
    mean_abs_percent_error,
    params_from_vector,
    predict,
    predict_batch,
    train,
)
from discflex.dataset import (
    RESPONSE_COLUMNS,
    Dataset,
    DesignPoint,
    DesignTag,
    split,
)
from discflex.explorer import synthesize_dataset


def _random_params(shape, rng, scale=1.0):
    return params_from_vector(
        shape, rng.uniform(-scale, scale, size=shape.total_params)
    )


def _linear_dataset(n=80, seed=11):
    """Three positive linear response surfaces over the design box."""
    rng = np.random.default_rng(seed)
    X = rng.uniform([24, 3, 0.3], [40, 9, 0.9], size=(n, 3))
    Y = np.column_stack(
        [
            2.0 * X[:, 0] + 3.0 * X[:, 1] + 10.0,
            X[:, 0] - 0.5 * X[:, 1] + 40.0 * X[:, 2] + 5.0,
            0.3 * X[:, 0] + X[:, 2] + 1.0,
        ]
    )
    return Dataset(X, Y, DesignTag.A)


@pytest.fixture(scope="module")
def case_study_net():
    """A 1x20 surrogate trained on the noisy design-A dataset, with its split."""
    data = synthesize_dataset(DesignTag.A, 127, seed=0)
    train_set, test_set = split(data, 100, seed=0)
    net = train(NetworkShape(3, (20,), 3), train_set, TrainConfig(seed=0, max_iterations=150))
    return net, train_set, test_set


# ---------------------------------------------------------------------------
# shapes and parameter layout


def test_shape_sizes_and_description():
    shape = NetworkShape(3, (20, 20), 3)
    assert shape.layer_sizes == (3, 20, 20, 3)
    assert shape.total_params == 4 * 20 + 21 * 20 + 21 * 3
    assert shape.describe() == "2x20x20"
    assert NetworkShape(3, (10,), 3).describe() == "1x10"


def test_shape_validation():
    with pytest.raises(ValueError):
        NetworkShape(3, (), 3)
    with pytest.raises(ValueError):
        NetworkShape(3, (0,), 3)
    with pytest.raises(ValueError):
        NetworkShape(0, (5,), 3)


def test_params_vector_round_trip():
    shape = NetworkShape(2, (4, 3), 2)
    vec = np.random.default_rng(1).standard_normal(shape.total_params)
    params = params_from_vector(shape, vec)
    assert np.array_equal(params.to_vector(), vec)
    assert params.weights[0].shape == (2, 4)
    assert params.weights[-1].shape == (3, 2)
    with pytest.raises(ValueError):
        params_from_vector(shape, vec[:-1])


def test_params_validation():
    with pytest.raises(ValueError):
        NetworkParams((np.zeros((2, 3)),), (np.zeros(2),))  # bias mismatch
    with pytest.raises(ValueError):
        NetworkParams(
            (np.zeros((2, 3)), np.zeros((4, 1))), (np.zeros(3), np.zeros(1))
        )  # layers do not chain
    with pytest.raises(ValueError):
        NetworkParams((np.full((1, 1), np.nan),), (np.zeros(1),))


# ---------------------------------------------------------------------------
# forward pass


def test_forward_zero_params_gives_zero():
    shape = NetworkShape(2, (3,), 1)
    params = params_from_vector(shape, np.zeros(shape.total_params))
    assert forward(params, np.array([5.0, -7.0])) == pytest.approx(0.0)


def test_forward_single_neuron_hand_value():
    # one input, one tanh neuron, identity output layer: y = tanh(2x)
    params = NetworkParams(
        (np.array([[2.0]]), np.array([[1.0]])),
        (np.array([0.0]), np.array([0.0])),
    )
    out = forward(params, np.array([0.25]))
    assert out[0] == pytest.approx(np.tanh(0.5), rel=1e-12)
    assert out[0] == pytest.approx(0.46211715726000974, rel=1e-12)


def test_forward_output_layer_is_linear():
    shape = NetworkShape(2, (4,), 1)
    rng = np.random.default_rng(3)
    params = _random_params(shape, rng)
    doubled = NetworkParams(
        params.weights[:-1] + (2.0 * params.weights[-1],), params.biases
    )
    x = rng.uniform(-2, 2, size=2)
    b = params.biases[-1][0]
    y1 = forward(params, x)[0]
    y2 = forward(doubled, x)[0]
    assert y2 - b == pytest.approx(2.0 * (y1 - b), rel=1e-12)


def test_forward_hidden_activations_are_bounded():
    # saturated hidden layer feeding a unit-weight sum: |y| <= width
    width = 5
    params = NetworkParams(
        (np.full((1, width), 1e6), np.ones((width, 1))),
        (np.zeros(width), np.zeros(1)),
    )
    for x in (-1e6, -1.0, 0.5, 1e6):
        assert abs(forward(params, np.array([x]))[0]) <= width + 1e-12


def test_forward_batch_matches_scalar_calls():
    shape = NetworkShape(3, (5, 4), 2)
    rng = np.random.default_rng(7)
    params = _random_params(shape, rng)
    X = rng.standard_normal((6, 3))
    batch = forward(params, X)
    for i in range(6):
        assert np.allclose(batch[i], forward(params, X[i]), rtol=1e-14)


def test_forward_rejects_wrong_arity():
    shape = NetworkShape(3, (4,), 1)
    params = _random_params(shape, np.random.default_rng(0))
    with pytest.raises(ValueError, match="expected 3 inputs"):
        forward(params, np.array([1.0, 2.0]))


# ---------------------------------------------------------------------------
# gradient of the squared-error term


def test_gradient_zero_at_zero_residual():
    shape = NetworkShape(2, (3,), 2)
    rng = np.random.default_rng(13)
    params = _random_params(shape, rng)
    X = rng.standard_normal((5, 2))
    Y = forward(params, X)
    g = gradient(params, X, Y).to_vector()
    assert np.allclose(g, 0.0, atol=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(17)
    h = 1e-6
    for trial in range(100):
        n_in = int(rng.integers(1, 4))
        n_out = int(rng.integers(1, 4))
        hidden = tuple(int(v) for v in rng.integers(2, 7, size=rng.integers(1, 3)))
        shape = NetworkShape(n_in, hidden, n_out)
        w = rng.uniform(-1, 1, size=shape.total_params)
        X = rng.uniform(-2, 2, size=(int(rng.integers(1, 11)), n_in))
        Y = rng.uniform(-2, 2, size=(X.shape[0], n_out))
        g = gradient(params_from_vector(shape, w), X, Y).to_vector()

        def loss(vec):
            r = forward(params_from_vector(shape, vec), X) - Y
            return float(np.sum(r * r))

        fd = np.empty_like(w)
        for i in range(w.size):
            wp, wm = w.copy(), w.copy()
            wp[i] += h
            wm[i] -= h
            fd[i] = (loss(wp) - loss(wm)) / (2 * h)
        assert np.allclose(g, fd, rtol=1e-5, atol=1e-7), f"trial {trial}"


def test_last_layer_gradient_closed_form():
    # for one hidden layer the output-layer gradient is 2 * a^T (yhat - y)
    shape = NetworkShape(3, (6,), 2)
    rng = np.random.default_rng(19)
    params = _random_params(shape, rng)
    X = rng.standard_normal((8, 3))
    Y = rng.standard_normal((8, 2))
    a = np.tanh(X @ params.weights[0] + params.biases[0])
    resid = a @ params.weights[1] + params.biases[1] - Y
    g = gradient(params, X, Y)
    assert np.allclose(g.weights[1], 2.0 * a.T @ resid, rtol=1e-12)
    assert np.allclose(g.biases[1], 2.0 * resid.sum(axis=0), rtol=1e-12)


def test_gradient_rejects_misaligned_batches():
    shape = NetworkShape(2, (3,), 1)
    params = _random_params(shape, np.random.default_rng(0))
    with pytest.raises(ValueError):
        gradient(params, np.zeros((3, 2)), np.zeros((4, 1)))


# ---------------------------------------------------------------------------
# training


def test_train_recovers_linear_surfaces():
    data = _linear_dataset()
    train_set, test_set = split(data, 60, seed=1)
    net = train(NetworkShape(3, (20,), 3), train_set, TrainConfig(seed=0, max_iterations=150))
    mape = mean_abs_percent_error(test_set.responses, predict_batch(net, test_set.designs))
    assert np.all(mape < 1.0)


def test_train_is_deterministic():
    data = _linear_dataset()
    cfg = TrainConfig(seed=9, max_iterations=20)
    n1 = train(NetworkShape(3, (10,), 3), data, cfg)
    n2 = train(NetworkShape(3, (10,), 3), data, cfg)
    assert np.array_equal(n1.params.to_vector(), n2.params.to_vector())
    assert n1.summary == n2.summary


def test_train_interpolates_tiny_set_when_prior_is_off():
    rng = np.random.default_rng(29)
    X = rng.uniform([24, 3, 0.3], [40, 9, 0.9], size=(6, 3))
    Y = np.column_stack([X[:, 0] * X[:, 2], X[:, 1] + X[:, 2], X.sum(axis=1)])
    tiny = Dataset(X, Y, DesignTag.A)
    cfg = TrainConfig(
        seed=3, max_iterations=300, adapt_hyperparams=False,
        initial_alpha=1e-10, initial_beta=1.0,
    )
    net = train(NetworkShape(3, (20,), 3), tiny, cfg)
    pred = predict_batch(net, X)
    assert np.max(np.abs((pred - Y) / Y)) < 1e-6


def test_strong_weight_prior_shrinks_weights():
    data = _linear_dataset()
    train_set, _ = split(data, 60, seed=1)
    kwargs = dict(seed=5, max_iterations=60, adapt_hyperparams=False)
    strong = train(
        NetworkShape(3, (10,), 3), train_set,
        TrainConfig(initial_alpha=100.0, initial_beta=0.01, **kwargs),
    )
    weak = train(
        NetworkShape(3, (10,), 3), train_set,
        TrainConfig(initial_alpha=0.01, initial_beta=100.0, **kwargs),
    )
    norm = lambda net: float(net.params.to_vector() @ net.params.to_vector())
    assert norm(strong) < 1e-6 * norm(weak)


def test_fixed_hyperparam_objective_non_increasing_in_iteration_budget():
    # longer budgets are exact prefixes of shorter ones for a fixed seed
    data = _linear_dataset()
    train_set, _ = split(data, 60, seed=1)
    objectives = []
    for k in range(1, 9):
        cfg = TrainConfig(seed=7, max_iterations=k, adapt_hyperparams=False)
        net = train(NetworkShape(3, (8,), 3), train_set, cfg)
        objectives.append(net.summary.objective)
    assert all(b <= a + 1e-12 for a, b in zip(objectives, objectives[1:]))


def test_divergent_hyperparams_raise_at_initialization():
    data = _linear_dataset(n=20)
    cfg = TrainConfig(seed=0, max_iterations=10, initial_beta=1e308)
    with pytest.raises(TrainingDivergenceError) as err:
        train(NetworkShape(3, (5,), 3), data, cfg)
    assert err.value.iteration == 0


def test_train_input_validation():
    data = _linear_dataset(n=20)
    with pytest.raises(ValueError, match="arity"):
        train(NetworkShape(2, (5,), 3), data, TrainConfig())
    one_row = data.subset([0])
    with pytest.raises(ValueError, match="at least 2 rows"):
        train(NetworkShape(3, (5,), 3), one_row, TrainConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(max_iterations=0)
    with pytest.raises(ValueError):
        TrainConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        TrainConfig(initial_alpha=-1.0)


# ---------------------------------------------------------------------------
# trained case-study surrogate


def test_case_study_generalization(case_study_net):
    net, _, test_set = case_study_net
    mape = mean_abs_percent_error(test_set.responses, predict_batch(net, test_set.designs))
    assert np.all(mape < 5.0)


def test_evidence_terms_balance_at_half_target_count(case_study_net):
    # after every hyperparameter re-estimation beta*E_D + alpha*E_W
    # collapses to (N - gamma)/2 + gamma/2, i.e. half the target count
    net, train_set, _ = case_study_net
    assert net.summary.objective == pytest.approx(train_set.responses.size / 2, rel=1e-9)


def test_effective_parameter_count_within_bounds(case_study_net):
    net, _, _ = case_study_net
    assert 0.0 <= net.summary.gamma <= net.shape.total_params
    assert net.summary.alpha > 0 and net.summary.beta > 0
    assert net.summary.stop_reason in {"max_iterations", "converged", "no_improving_step"}


def test_prediction_near_generating_model(case_study_net):
    net, _, _ = case_study_net
    point = DesignPoint(32.0, 6.0, 0.6)
    models = rsm.reference_models(DesignTag.A)
    got = predict(net, point).as_array()
    want = np.array([rsm.evaluate(models[name], point) for name in RESPONSE_COLUMNS])
    assert np.all(np.abs(got - want) / np.abs(want) < 0.10)


def test_predict_batch_is_pure(case_study_net):
    net, _, test_set = case_study_net
    first = predict_batch(net, test_set.designs)
    second = predict_batch(net, test_set.designs)
    assert np.array_equal(first, second)
    assert predict_batch(net, test_set.designs[0]).shape == (1, 3)


# ---------------------------------------------------------------------------
# error metric


def test_mape_hand_values():
    same = np.array([[3.0, 4.0], [5.0, 6.0]])
    assert np.allclose(mean_abs_percent_error(same, same), [0.0, 0.0])
    got = mean_abs_percent_error(np.array([[100.0], [200.0]]), np.array([[90.0], [220.0]]))
    assert got == pytest.approx([10.0])


def test_mape_rejects_zero_truth_with_location():
    truth = np.array([[1.0, 0.0], [2.0, 3.0]])
    with pytest.raises(ValueError, match=r"\(0,1\)"):
        mean_abs_percent_error(truth, truth + 1.0)


def test_mape_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        mean_abs_percent_error(np.ones((2, 2)), np.ones((3, 2)))
