import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reference_impls import (
    posterior_reference,
    sweep_reference,
    top_features_reference,
)
from webaudit.classifier import (
    DEFAULT_THRESHOLD_GRID,
    MODEL_FORMAT,
    NBModel,
    Prediction,
    balance_classes,
    classify_unlabeled,
    confusion_matrix,
    evaluate,
    model_from_json,
    model_to_json,
    predict_proba,
    split_train_validation,
    threshold_sweep,
    top_features,
    train,
)
from webaudit.features import SourceMode, SparseVector, Vocabulary, vectorize_bow
from webaudit.synth import class_vocabulary, make_labeled_documents
from webaudit.textprep import Document


def doc(label: str, n: int = 0) -> Document:
    return Document(
        source_url=f"http://{label.lower()}{n}.example/",
        category_label=label,
        content_tokens=("cancer", "treatment"),
        meta_tokens=(),
        rejected_reason=None,
    )


def vocab_of(*terms: str) -> Vocabulary:
    return Vocabulary(
        terms=tuple(terms),
        df=tuple(1 for _ in terms),
        k=len(terms),
        source_mode=SourceMode.CONTENT,
    )


def vec(*entries) -> SparseVector:
    return SparseVector(entries=tuple(entries))


# -- class balancing --------------------------------------------------------------


def test_balance_keeps_equal_classes_untouched():
    docs = [doc("A", i) for i in range(10)] + [doc("B", i) for i in range(10)]
    assert balance_classes(docs, seed=0) == docs


def test_balance_downsamples_to_smallest_class():
    docs = [doc("A", i) for i in range(100)] + [doc("B", i) for i in range(40)]
    balanced = balance_classes(docs, seed=1)
    sizes = {}
    for d in balanced:
        sizes[d.category_label] = sizes.get(d.category_label, 0) + 1
    assert sizes == {"A": 40, "B": 40}


def test_balance_is_seeded_sampling_without_replacement():
    docs = [doc("A", i) for i in range(50)] + [doc("B", i) for i in range(10)]
    one = balance_classes(docs, seed=7)
    two = balance_classes(docs, seed=7)
    other = balance_classes(docs, seed=8)
    assert one == two
    assert one != other
    kept_a = [d for d in one if d.category_label == "A"]
    assert len(set(d.source_url for d in kept_a)) == 10


def test_balance_rejects_unlabeled():
    bad = Document(
        source_url="http://x.example/",
        category_label=None,
        content_tokens=("one",),
        meta_tokens=(),
        rejected_reason=None,
    )
    with pytest.raises(ValueError):
        balance_classes([bad], seed=0)


# -- stratified split --------------------------------------------------------------


def test_split_small_class_arithmetic():
    docs = [doc("A", i) for i in range(10)]
    train_docs, val_docs = split_train_validation(docs, ratio=0.7, seed=0)
    assert len(train_docs) == 7 and len(val_docs) == 3


def test_split_is_a_partition():
    docs = [doc("A", i) for i in range(23)] + [doc("B", i) for i in range(17)]
    train_docs, val_docs = split_train_validation(docs, ratio=0.7, seed=3)
    train_urls = {d.source_url for d in train_docs}
    val_urls = {d.source_url for d in val_docs}
    assert train_urls & val_urls == set()
    assert train_urls | val_urls == {d.source_url for d in docs}


def test_split_published_class_size_arithmetic():
    # 1,956 per class splits 70/30 into 1,369 train / 587 validation.
    docs = [doc("A", i) for i in range(1956)] + [doc("B", i) for i in range(1956)]
    train_docs, val_docs = split_train_validation(docs, ratio=0.7, seed=0)
    per_class_train = sum(1 for d in train_docs if d.category_label == "A")
    per_class_val = sum(1 for d in val_docs if d.category_label == "A")
    assert per_class_train == 1369
    assert per_class_val == 587
    assert math.floor(0.7 * 1956) == 1369


def test_split_rejects_degenerate_ratio():
    docs = [doc("A", i) for i in range(4)]
    for ratio in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            split_train_validation(docs, ratio=ratio, seed=0)


# -- training ---------------------------------------------------------------------


def test_train_hand_example():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 2.0)), vec((1, 1.0))], ["A", "B"], vocab, alpha=1.0)
    assert model.classes == ("A", "B")
    assert model.log_prior[0] == pytest.approx(math.log(0.5), abs=1e-12)
    # Class A saw feature 0 twice and nothing else: (1+2)/(2+2) = 0.75.
    assert model.log_likelihood[0][0] == pytest.approx(math.log(0.75), abs=1e-12)
    assert model.log_likelihood[0][1] == pytest.approx(math.log(0.25), abs=1e-12)
    assert model.log_likelihood[1][0] == pytest.approx(math.log(1 / 3), abs=1e-12)
    assert model.log_likelihood[1][1] == pytest.approx(math.log(2 / 3), abs=1e-12)


def test_single_class_prior_is_zero():
    vocab = vocab_of("aaa")
    model = train([vec((0, 1.0))], ["only"], vocab, alpha=1.0)
    assert model.log_prior == (0.0,)


def test_likelihoods_normalize_per_class():
    vocab = vocab_of("aaa", "bbb", "ccc")
    model = train(
        [vec((0, 2.0), (2, 1.0)), vec((1, 4.0))], ["A", "B"], vocab, alpha=0.5
    )
    for row in model.log_likelihood:
        assert sum(math.exp(x) for x in row) == pytest.approx(1.0, abs=1e-9)
    assert sum(math.exp(x) for x in model.log_prior) == pytest.approx(1.0, abs=1e-9)


def test_train_input_validation():
    vocab = vocab_of("aaa")
    with pytest.raises(ValueError):
        train([], [], vocab)
    with pytest.raises(ValueError):
        train([vec((0, 1.0))], ["A"], vocab, alpha=0.0)
    with pytest.raises(ValueError):
        train([vec((0, 1.0))], ["A", "B"], vocab)


# -- prediction --------------------------------------------------------------------


def test_empty_vector_returns_priors():
    vocab = vocab_of("aaa", "bbb")
    model = train(
        [vec((0, 1.0)), vec((0, 1.0)), vec((1, 1.0))], ["A", "A", "B"], vocab
    )
    prediction = predict_proba(model, vec())
    assert prediction.probabilities[0] == pytest.approx(2 / 3, abs=1e-12)
    assert prediction.probabilities[1] == pytest.approx(1 / 3, abs=1e-12)
    assert prediction.predicted_class == "A"


def test_prediction_ties_go_to_first_class_in_order():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 1.0)), vec((1, 1.0))], ["B", "A"], vocab)
    prediction = predict_proba(model, vec())
    assert prediction.probabilities[0] == pytest.approx(prediction.probabilities[1])
    assert prediction.predicted_class == "A"  # classes sort alphabetically


def test_huge_counts_stay_finite_and_keep_argmax():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 3.0)), vec((1, 2.0))], ["A", "B"], vocab)
    small = predict_proba(model, vec((0, 2.0)))
    huge = predict_proba(model, vec((0, 2000.0)))
    assert all(math.isfinite(p) for p in huge.probabilities)
    assert huge.predicted_class == small.predicted_class == "A"
    assert huge.p_max == pytest.approx(1.0, abs=1e-9)


def test_dimension_mismatch_rejected():
    vocab = vocab_of("aaa")
    model = train([vec((0, 1.0))], ["A"], vocab)
    with pytest.raises(ValueError):
        predict_proba(model, vec((5, 1.0)))


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_posterior_matches_direct_bayes_oracle(data):
    n_classes = data.draw(st.integers(min_value=2, max_value=3))
    k = data.draw(st.integers(min_value=1, max_value=8))
    n_docs = data.draw(st.integers(min_value=n_classes, max_value=6))
    labels = [f"c{i}" for i in range(n_classes)]
    labels += [
        data.draw(st.sampled_from(labels)) for _ in range(n_docs - n_classes)
    ]
    weight = st.one_of(
        st.integers(min_value=1, max_value=4).map(float),
        st.floats(min_value=0.05, max_value=3.0, allow_nan=False),
    )
    entry_sets = [
        data.draw(
            st.dictionaries(st.integers(min_value=0, max_value=k - 1), weight, max_size=k)
        )
        for _ in range(n_docs)
    ]
    query = data.draw(
        st.dictionaries(st.integers(min_value=0, max_value=k - 1), weight, max_size=k)
    )
    alpha = data.draw(st.sampled_from([1.0, 0.5, 2.0]))

    vocab = vocab_of(*[f"t{i:02d}" for i in range(k)])
    matrix = [vec(*sorted(entries.items())) for entries in entry_sets]
    model = train(matrix, labels, vocab, alpha=alpha)
    got = predict_proba(model, vec(*sorted(query.items())))

    ref_classes, ref_probs = posterior_reference(
        [sorted(e.items()) for e in entry_sets],
        labels,
        k,
        alpha,
        sorted(query.items()),
    )
    assert list(model.classes) == ref_classes
    assert got.probabilities == pytest.approx(ref_probs, abs=1e-9)
    assert sum(got.probabilities) == pytest.approx(1.0, abs=1e-9)


def test_scaling_all_weights_preserves_ranking_direction():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 5.0)), vec((1, 5.0))], ["A", "B"], vocab)
    base = predict_proba(model, vec((0, 1.0)))
    scaled = predict_proba(model, vec((0, 7.0)))
    assert scaled.predicted_class == base.predicted_class
    assert scaled.p_max >= base.p_max


# -- thresholded assignment -----------------------------------------------------------


def test_classify_unlabeled_threshold_gate():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 4.0)), vec((1, 4.0))], ["A", "B"], vocab)
    confident = vec((0, 5.0))
    assert classify_unlabeled(model, confident, threshold=0.5) == "A"
    assert classify_unlabeled(model, confident, threshold=0.999999) is None
    assert classify_unlabeled(model, vec(), threshold=0.6) is None  # ties at 0.5


def test_classify_unlabeled_threshold_range():
    vocab = vocab_of("aaa")
    model = train([vec((0, 1.0))], ["A"], vocab)
    with pytest.raises(ValueError):
        classify_unlabeled(model, vec(), threshold=1.5)


# -- evaluation --------------------------------------------------------------------


def test_confusion_matrix_counts_and_percentages():
    pairs = [("A", "A"), ("A", "B"), ("A", "A"), ("B", "B")]
    matrix = confusion_matrix(pairs, ("A", "B"))
    assert matrix.counts == ((2, 1), (0, 1))
    assert matrix.row_percent[0] == pytest.approx((200 / 3, 100 / 3))
    assert matrix.row_percent[1] == (0.0, 100.0)
    assert matrix.zero_rows == ()
    for row in matrix.row_percent:
        assert sum(row) == pytest.approx(100.0, abs=1e-6)


def test_confusion_matrix_zero_rows_flagged():
    matrix = confusion_matrix([("A", "A")], ("A", "B"))
    assert matrix.zero_rows == ("B",)
    assert matrix.row_percent[1] == (0.0, 0.0)


def test_confusion_matrix_rejects_unknown_labels():
    with pytest.raises(ValueError):
        confusion_matrix([("A", "X")], ("A", "B"))


def test_evaluate_reports_accuracy_and_diagonal():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 5.0)), vec((1, 5.0))], ["A", "B"], vocab)
    matrix = [vec((0, 3.0)), vec((1, 3.0)), vec((0, 3.0))]
    labels = ["A", "B", "B"]
    accuracy, confusion, per_class = evaluate(model, matrix, labels)
    assert accuracy == pytest.approx(200 / 3)
    assert per_class == (pytest.approx(100.0), pytest.approx(50.0))
    assert confusion.counts == ((1, 0), (1, 1))


# -- threshold sweep ---------------------------------------------------------------


def fake_prediction(p_max: float) -> Prediction:
    rest = (1.0 - p_max) / 2.0
    return Prediction(
        probabilities=(p_max, rest, rest),
        predicted_class="A",
        p_max=p_max,
    )


def test_sweep_matches_reference_and_is_monotone():
    rng = random.Random(5)
    points = [(rng.uniform(0.34, 1.0), rng.random() < 0.6) for _ in range(400)]
    predictions = [(fake_prediction(p), truth) for p, truth in points]
    rows = threshold_sweep(predictions, DEFAULT_THRESHOLD_GRID)
    expected = sweep_reference(points, DEFAULT_THRESHOLD_GRID)
    for got, want in zip(rows, expected):
        assert got[0] == want[0]
        assert got[1] == pytest.approx(want[1], abs=1e-12)
        assert got[2] == pytest.approx(want[2], abs=1e-12)
    accepted_counts = [
        sum(1 for p, _ in points if p >= t) for t, _, _ in rows
    ]
    assert accepted_counts == sorted(accepted_counts, reverse=True)


def test_sweep_empty_accepted_set_uses_zero_rate():
    predictions = [(fake_prediction(0.4), True)]
    rows = threshold_sweep(predictions, (0.9,))
    assert rows == [(0.9, 0.0, 0.0)]


def test_sweep_requires_predictions():
    with pytest.raises(ValueError):
        threshold_sweep([], DEFAULT_THRESHOLD_GRID)


# -- distinctive features --------------------------------------------------------------


def test_top_features_hand_example():
    vocab = vocab_of("god", "cancer")
    model = train(
        [vec((0, 9.0)), vec((1, 9.0))],
        ["Religion", "Health"],
        vocab,
        alpha=1.0,
    )
    ranked = top_features(model, vocab, n=1)
    assert ranked["Religion"][0][0] == "god"
    assert ranked["Health"][0][0] == "cancer"
    assert ranked["Religion"][0][1] > 0


def test_top_features_matches_reference_and_orders_ties_by_term():
    vocab = vocab_of("aaa", "bbb", "ccc", "ddd")
    model = train(
        [vec((0, 2.0), (1, 2.0)), vec((2, 2.0), (3, 2.0))],
        ["A", "B"],
        vocab,
    )
    ranked = top_features(model, vocab, n=4)
    expected = top_features_reference(
        model.log_likelihood, model.classes, vocab.terms, 4
    )
    assert ranked == expected
    assert [term for term, _ in ranked["A"]] == ["aaa", "bbb", "ccc", "ddd"]


def test_top_features_validation():
    vocab = vocab_of("aaa")
    model = train([vec((0, 1.0))], ["A"], vocab)
    with pytest.raises(ValueError):
        top_features(model, vocab, n=5)
    with pytest.raises(ValueError):
        top_features(model, vocab, n=1)  # single class has no rival


# -- serialization ------------------------------------------------------------------


def test_model_json_round_trip_preserves_predictions():
    vocab = vocab_of("aaa", "bbb", "ccc")
    model = train(
        [vec((0, 2.0), (1, 1.0)), vec((2, 3.0)), vec((1, 1.0))],
        ["A", "B", "A"],
        vocab,
    )
    clone = model_from_json(model_to_json(model))
    assert clone.classes == model.classes
    assert clone.mode == model.mode
    assert clone.vocab_ref == model.vocab_ref
    query = vec((0, 1.0), (2, 2.0))
    assert predict_proba(clone, query).probabilities == pytest.approx(
        predict_proba(model, query).probabilities, abs=1e-9
    )


def test_model_json_layout():
    vocab = vocab_of("aaa", "bbb")
    model = train([vec((0, 1.0)), vec((1, 1.0))], ["A", "B"], vocab)
    obj = json.loads(model_to_json(model))
    assert obj["version"] == MODEL_FORMAT
    assert obj["classes"] == ["A", "B"]
    assert obj["n_features"] == 2
    assert len(obj["log_likelihood"]) == 4  # row-major classes x features
    assert obj["mode"] == "C"
    assert obj["vocab_ref"] == vocab.content_hash()


def test_model_json_rejects_bad_version_and_shape():
    vocab = vocab_of("aaa")
    model = train([vec((0, 1.0))], ["A"], vocab)
    obj = json.loads(model_to_json(model))
    obj["version"] = "nbmodel/999"
    with pytest.raises(ValueError):
        model_from_json(json.dumps(obj))
    obj["version"] = MODEL_FORMAT
    obj["log_likelihood"] = obj["log_likelihood"] + [0.0]
    with pytest.raises(ValueError):
        model_from_json(json.dumps(obj))


# -- end-to-end sanity on separable documents ----------------------------------------


def test_separable_documents_classify_perfectly():
    vocabularies = {
        label: class_vocabulary(f"w{j}x", 10)
        for j, label in enumerate(["Faith", "Health", "Politics"])
    }
    docs = make_labeled_documents(
        vocabularies, docs_per_class=30, tokens_per_doc=12, seed=9
    )
    balanced = balance_classes(docs, seed=0)
    train_docs, val_docs = split_train_validation(balanced, 0.7, seed=0)
    from webaudit.features import build_vocabulary

    vocab = build_vocabulary(
        [d.content_tokens for d in train_docs], k=30, mode=SourceMode.CONTENT
    )
    matrix = [vectorize_bow(d.content_tokens, vocab) for d in train_docs]
    model = train(matrix, [d.category_label for d in train_docs], vocab)
    val_matrix = [vectorize_bow(d.content_tokens, vocab) for d in val_docs]
    accuracy, _, _ = evaluate(model, val_matrix, [d.category_label for d in val_docs])
    assert accuracy == pytest.approx(100.0)
