"""Tests for the illumination classifier and closest-domain selection."""

import dataclasses
import logging
from collections import Counter
from unittest.mock import patch

import numpy as np
import pytest

from services.illum_inference import (
    DomainSelection,
    _confusion,
    _degenerate_pairs,
    classify_images,
    infer_domain,
    load_illum,
    random_domain,
    save_illum,
    select_domain,
    train_illum_classifier,
)
from services.reid_training import load_reid
from synth.generator import RealnessGap, generate_domain, generate_target_domain
from synth.specs import (
    IlluminationSpec,
    nearest_illumination,
    neighbouring_illumination,
    sample_identities,
    sample_illuminations,
)
from utils.config import StageConfig, TrainConfig
from utils.errors import ValidationError

QUICK = TrainConfig(learning_rate=0.01, epochs=1, batch_size=8, seed=0)


@pytest.fixture(scope="module")
def domains():
    """Three synthetic domains under clearly different illuminations, 32×16 crops."""
    identities = sample_identities(4, rng_seed=0)
    illuminations = [
        IlluminationSpec(0),
        IlluminationSpec(1, (1.6, 0.5, 0.5), (0.1, 0.0, 0.0), 1.0, (0.8, 0.3, 0.3)),
        IlluminationSpec(2, (0.5, 0.6, 1.6), (0.0, 0.0, 0.1), 1.4, (0.2, 0.3, 0.8)),
    ]
    return [generate_domain(identities, illum, 3, 1, height=32, width=16) for illum in illuminations]


@pytest.fixture(scope="module")
def classifier(domains):
    """A classifier trained for one epoch."""
    return train_illum_classifier(domains, QUICK)


def test_select_domain_example():
    """Test that the most voted class wins."""
    k_star, votes = select_domain([2, 2, 5, 2, 7], 8)

    assert k_star == 2
    assert votes == (0, 0, 3, 0, 0, 1, 0, 1)


def test_select_domain_ties_go_to_smallest_index():
    """Test that equal vote counts select the smaller class index."""
    assert select_domain([4, 1, 4, 1], 5)[0] == 1


def test_select_domain_matches_mode():
    """Test select_domain against a Counter-based mode on random prediction vectors."""
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n_classes = int(rng.integers(1, 12))
        predictions = rng.integers(0, n_classes, size=int(rng.integers(1, 40)))
        counts = Counter(predictions.tolist())
        best = max(counts.values())

        assert select_domain(predictions, n_classes)[0] == min(k for k, c in counts.items() if c == best)


def test_select_domain_permutation_invariant():
    """Test that the order of the predictions does not matter."""
    rng = np.random.default_rng(1)
    predictions = rng.integers(0, 6, size=50)

    assert select_domain(predictions, 6) == select_domain(rng.permutation(predictions), 6)


def test_select_domain_monotone():
    """Test that adding a vote for the winner never changes the winner."""
    predictions = [0, 3, 3, 1, 0, 3]
    k_star, _ = select_domain(predictions, 4)

    assert select_domain(predictions + [k_star], 4)[0] == k_star


def test_select_domain_errors():
    """Test that empty and out-of-range predictions are rejected."""
    with pytest.raises(ValidationError, match="zero predictions"):
        select_domain([], 3)
    with pytest.raises(ValidationError, match=r"\[0, 3\)"):
        select_domain([0, 3], 3)


def test_infer_domain_maps_class_to_domain_id(classifier):
    """Test that the winning class index is reported with its synthetic domain id."""
    images = [np.zeros((32, 16, 3))] * 5
    with patch("services.illum_inference.classify_images", return_value=np.array([2, 1, 2, 0, 2])):
        selection = infer_domain(classifier, images)

    assert selection.k_star == 2
    assert selection.domain_id == classifier.domain_ids[2]
    assert selection.vote_counts == (1, 1, 3)
    assert selection.to_dict()["n_images"] == 5


def test_infer_domain_empty_target(classifier):
    """Test that a target without images is rejected."""
    with pytest.raises(ValidationError, match="at least one target image"):
        infer_domain(classifier, [])


def test_classifier_classes(classifier, domains):
    """Test that there is one class per synthetic domain and predictions stay in range."""
    assert classifier.domain_ids == [0, 1, 2]
    predictions = classify_images(classifier, domains[1].images())

    assert predictions.shape == (len(domains[1]),)
    assert set(predictions.tolist()) <= {0, 1, 2}
    assert 0.0 <= classifier.history["holdout_accuracy"] <= 1.0


def test_training_errors(domains):
    """Test that one domain, repeated domain ids and mixed sizes are rejected."""
    with pytest.raises(ValidationError, match="at least 2 synthetic domains"):
        train_illum_classifier(domains[:1], QUICK)
    with pytest.raises(ValidationError, match="distinct domain ids"):
        train_illum_classifier([domains[0], domains[0]], QUICK)

    large = generate_domain(sample_identities(2, rng_seed=0), IlluminationSpec(9), 1, 1)
    with pytest.raises(ValidationError, match="different image sizes"):
        train_illum_classifier([domains[0], large], QUICK)


def test_degenerate_pairs():
    """Test that two domains confused with each other are reported."""
    truth = np.array([0, 0, 0, 0, 1, 1, 1, 1, 2, 2])
    predicted = np.array([0, 1, 1, 0, 1, 0, 1, 1, 2, 2])

    confusion = _confusion(truth, predicted, 3)

    assert confusion[0, 1] == 0.5
    assert np.allclose(confusion.sum(axis=1), 1.0)
    assert _degenerate_pairs(confusion, [10, 11, 12]) == [[10, 11]]


def test_checkpoint_round_trip(tmp_path, classifier, domains):
    """Test that a saved classifier reloads with the same domains and predictions."""
    save_illum(classifier, tmp_path / "illum.pt")
    loaded = load_illum(tmp_path / "illum.pt")

    assert loaded.domain_ids == classifier.domain_ids
    images = domains[0].images()
    assert np.array_equal(classify_images(loaded, images), classify_images(classifier, images))


def test_checkpoint_kind_checked(tmp_path, classifier):
    """Test that an illumination checkpoint cannot be loaded as something else."""
    save_illum(classifier, tmp_path / "illum.pt")

    with pytest.raises(ValidationError, match="expected reid"):
        load_reid(tmp_path / "illum.pt")


@pytest.mark.slow
def test_classifier_separates_illuminations(domains):
    """Test that well-separated illuminations are recognised well above chance."""
    trained = train_illum_classifier(domains, TrainConfig(learning_rate=0.05, epochs=15, batch_size=8, seed=2))
    selection = infer_domain(trained, domains[2].images())

    assert trained.history["final_accuracy"] > 0.6
    assert selection.domain_id == 2


def test_identical_illuminations_flagged(caplog):
    """Test that two domains rendered under the same illumination are near chance and reported as degenerate."""
    identities = sample_identities(6, rng_seed=1)
    twins = [
        generate_domain(identities, IlluminationSpec(illum_id, (1.2, 0.9, 0.8)), 5, render_seed, height=32, width=16)
        for illum_id, render_seed in ((0, 1), (1, 2))
    ]

    with caplog.at_level(logging.WARNING):
        trained = train_illum_classifier(twins, TrainConfig(learning_rate=0.01, epochs=5, batch_size=8, seed=0))

    assert trained.history["holdout_accuracy"] == pytest.approx(0.5, abs=0.25)
    assert trained.history["degenerate_pairs"] == [[0, 1]]
    assert "may be degenerate" in caplog.text


def test_random_domain_votes_sum_to_images(classifier):
    """Test that a random selection credits every image to the drawn class and records its mode."""
    selection = random_domain(classifier, 40, np.random.default_rng(3))

    assert sum(selection.vote_counts) == selection.n_images == 40
    assert selection.vote_counts[selection.k_star] == 40
    assert selection.domain_id == classifier.domain_ids[selection.k_star]
    assert selection.to_dict()["mode"] == "random"


def test_domain_selection_invariants():
    """Test that votes must sum to the image count and k_star must be their first maximum."""
    assert DomainSelection(1, (0, 3, 3), 6).to_dict()["mode"] == "inferred"
    with pytest.raises(ValidationError, match="n_images"):
        DomainSelection(0, (), 5)
    with pytest.raises(ValidationError, match="first maximum"):
        DomainSelection(2, (0, 3, 3), 6)


@pytest.fixture(scope="module")
def catalog_classifier():
    """Twelve toy domains at full size and a classifier trained with the default illumination settings."""
    catalog = sample_illuminations(12, rng_seed=5)
    identities = sample_identities(8, rng_seed=5)
    domains = [generate_domain(identities, illum, 4, 6) for illum in catalog]
    return catalog, train_illum_classifier(domains, dataclasses.replace(StageConfig().illum, seed=0))


@pytest.mark.slow
def test_twelve_domain_holdout_accuracy(catalog_classifier):
    """Test that the classifier reaches 0.8 held-out per-image accuracy on twelve domains."""
    _, classifier = catalog_classifier

    assert classifier.num_classes == 12
    assert classifier.history["holdout_accuracy"] >= 0.8


@pytest.mark.slow
def test_held_out_cameras_select_nearest_domain(catalog_classifier):
    """Test that 100 images of a held-out camera near catalog entry j select j in at least 9 of 10 trials."""
    catalog, classifier = catalog_classifier
    target_identities = sample_identities(10, rng_seed=7, first_id=2000)
    rng = np.random.default_rng(11)
    hits = 0

    for trial in range(10):
        j = int(rng.integers(len(catalog)))
        held_out = neighbouring_illumination(catalog[j], 200 + trial, 0.05, rng)
        assert nearest_illumination(held_out, catalog).illum_id == catalog[j].illum_id

        target = generate_target_domain(target_identities, held_out, 10, RealnessGap(), trial, catalog)
        assert len(target) == 100
        hits += infer_domain(classifier, target.images()).domain_id == catalog[j].illum_id

    assert hits >= 9
