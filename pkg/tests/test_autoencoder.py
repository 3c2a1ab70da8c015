import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from conftest import CROSS, FAST
from convqae.adiabatic import brute_force_ground_state
from convqae.autoencoder import (
    QuantumAutoencoder,
    TrainConfig,
    build_problem,
    denoise,
    edge_products,
    evaluate_restoration,
    fields_from_image,
    hebbian_step,
    inject_noise,
    train_weights,
)
from convqae.grid import NeighborGraph, WeightSet, image_to_spins, spins_to_image

binary_images = st.integers(3, 6).flatmap(
    lambda h: st.integers(3, 6).flatmap(
        lambda w: st.lists(st.integers(0, 1), min_size=h * w, max_size=h * w).map(
            lambda px: np.array(px, dtype=np.uint8).reshape(h, w)
        )
    )
)


# -- fields ------------------------------------------------------------------------


def test_fields_all_white():
    np.testing.assert_array_equal(fields_from_image(np.zeros((3, 3))), np.full(9, -0.1))


def test_fields_all_black():
    np.testing.assert_array_equal(fields_from_image(np.ones((3, 3))), np.full(9, 0.1))


def test_fields_single_black_centre():
    img = np.zeros((3, 3), dtype=np.uint8)
    img[1, 1] = 1
    expected = np.full(9, -0.1)
    expected[4] = 0.1
    np.testing.assert_array_equal(fields_from_image(img), expected)


@pytest.mark.invariant
@settings(max_examples=50, deadline=None)
@given(img=binary_images)
def test_fields_are_invertible(img):
    back = (fields_from_image(img) > 0).astype(np.uint8).reshape(img.shape)
    assert np.array_equal(back, img)


def test_pixel_spin_mapping():
    img = np.array([[0, 1, 0]], dtype=np.uint8)
    assert list(image_to_spins(img)) == [1, -1, 1]
    assert np.array_equal(spins_to_image(image_to_spins(img), 3, 1), img)


def test_build_problem_shape_mismatch():
    ws = WeightSet(NeighborGraph.torus(3, 3), np.zeros(18))
    with pytest.raises(ValueError):
        build_problem(np.zeros((4, 4), dtype=np.uint8), ws)


# -- training ----------------------------------------------------------------------


def test_hebbian_step_example():
    values, error = hebbian_step([0.0], [1], [-1], 0.4)
    assert error[0] == 2
    assert values[0] == pytest.approx(-0.8)


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(
    w=st.lists(st.floats(-5, 5), min_size=6, max_size=6),
    t=st.lists(st.sampled_from([-1, 1]), min_size=6, max_size=6),
    o=st.lists(st.sampled_from([-1, 1]), min_size=6, max_size=6),
    lr=st.floats(0.01, 2.0),
)
def test_hebbian_step_moves_by_minus_lr_times_error(w, t, o, lr):
    new, error = hebbian_step(w, t, o, lr)
    assert set(np.unique(error)) <= {-2, 0, 2}
    np.testing.assert_array_equal(new, np.asarray(w) - lr * error)


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(
    w=st.lists(st.floats(-5, 5), min_size=6, max_size=6),
    t=st.lists(st.sampled_from([-1, 1]), min_size=6, max_size=6),
)
def test_hebbian_step_is_exact_noop_at_fixpoint(w, t):
    new, error = hebbian_step(w, t, t, 0.4)
    assert not error.any()
    assert np.array_equal(new, np.asarray(w, dtype=float))


@pytest.mark.invariant
@settings(max_examples=10, deadline=None)
@given(img=binary_images.filter(lambda a: a.size <= 12), seed=st.integers(0, 1000))
def test_fixpoint_leaves_weights_unchanged(img, seed):
    # with zero couplings the fields alone reproduce the clean image, so the
    # first epoch has no error and must not touch the weights
    ws = train_weights(img, TrainConfig(init_range=0.0, seed=seed))
    assert ws.converged and ws.epochs == 1
    assert np.array_equal(ws.values, np.zeros_like(ws.values))


def test_single_epoch_applies_one_update():
    cfg = TrainConfig(max_epochs=1, schedule=FAST, seed=4)
    ws = train_weights(CROSS, cfg)
    init = np.random.default_rng(4).uniform(-1.0, 1.0, 18)
    if ws.converged:
        np.testing.assert_array_equal(ws.values, init)
    else:
        diff = (init - ws.values) / 0.4
        assert set(np.round(np.unique(diff), 12)) <= {-2.0, 0.0, 2.0}


def test_training_converges_for_most_seeds():
    runs = [train_weights(CROSS, TrainConfig(seed=s)) for s in range(50)]
    assert np.mean([w.converged for w in runs]) >= 0.9


def test_converged_weights_reproduce_original():
    ws = train_weights(CROSS, TrainConfig(seed=0))
    assert ws.converged
    assert np.array_equal(denoise(CROSS, ws), CROSS)


def test_training_rejects_small_images():
    with pytest.raises(ValueError):
        train_weights(np.zeros((2, 3), dtype=np.uint8))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(init_range=-1)
    with pytest.raises(ValueError):
        TrainConfig(max_epochs=0)


# -- denoising ---------------------------------------------------------------------


def test_white_image_one_flip_is_cleaned():
    white = np.zeros((3, 3), dtype=np.uint8)
    ws = train_weights(white, TrainConfig(seed=2))
    noisy = white.copy()
    noisy[0, 2] = 1
    out = denoise(noisy, ws)
    config, _ = brute_force_ground_state(build_problem(noisy, ws))
    assert np.array_equal(out, spins_to_image(config, 3, 3))
    assert not out.any()


@pytest.mark.invariant
def test_denoise_is_deterministic():
    ws = train_weights(CROSS, TrainConfig(seed=1))
    noisy = inject_noise(CROSS, 0.3, 5)
    runs = {denoise(noisy, ws, seed=9).tobytes() for _ in range(3)}
    assert len(runs) == 1


def test_zero_noise_restores_everything():
    ws = train_weights(CROSS, TrainConfig(seed=0))
    stats = evaluate_restoration(CROSS, ws, 0.0, 5)
    assert stats.complete_fraction == 1.0
    assert list(stats.rows())[0] == (0, 0, 1)


# -- noise -------------------------------------------------------------------------


def test_noise_rate_zero_and_one():
    assert np.array_equal(inject_noise(CROSS, 0.0, 1), CROSS)
    assert np.array_equal(inject_noise(CROSS, 1.0, 1), 1 - CROSS)


def test_thirty_percent_of_nine_is_three():
    assert np.sum(inject_noise(CROSS, 0.3, 0) != CROSS) == 3


def test_noise_rounds_half_up():
    # 0.25 * 2 = 0.5 rounds to 1 flip
    assert np.sum(inject_noise(np.zeros((1, 2), dtype=np.uint8), 0.25, 0)) == 1


def test_noise_rejects_bad_rate():
    with pytest.raises(ValueError):
        inject_noise(CROSS, 1.5, 0)


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(img=binary_images, rate=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_noise_flip_count_and_involution(img, rate, seed):
    noisy = inject_noise(img, rate, seed)
    assert np.sum(noisy != img) == int(np.floor(rate * img.size + 0.5))
    assert np.array_equal(inject_noise(noisy, rate, seed), img)


# -- estimator ---------------------------------------------------------------------


def test_estimator_fit_transform():
    est = QuantumAutoencoder(num_steps=200, random_state=0)
    assert est.get_params()["learning_rate"] == 0.4
    est.fit(CROSS)
    assert est.converged_
    assert np.array_equal(est.transform(CROSS), CROSS)
    stack = np.stack([CROSS, CROSS])
    assert est.transform(stack).shape == (2, 3, 3)
    with pytest.raises(ValueError):
        est.transform(np.zeros((4, 4), dtype=np.uint8))
    assert clone(est).get_params() == est.get_params()


def test_edge_products_of_uniform_image():
    g = NeighborGraph.torus(3, 3)
    assert np.all(edge_products(np.ones(9), g) == 1)
