import random

import pytest
import torch
from hypothesis import given, settings, strategies as st

from dialogref.core import Provenance
from dialogref.detector import (
    MdConfig, MdExample, MdModel, detect, detect_model, detect_rules, enumerate_spans, merge_mentions,
    score_spans, span_loss, train_md,
)
from dialogref.core import Mention
from dialogref.text import normalize, tokens
from dialogref.training import TrainConfig

from helpers import background, finite_difference_check, screen, vocab_of


def tiny(dim=6, hidden=5, seed=0, **kw):
    torch.manual_seed(seed)
    v = vocab_of("how big is this house where does he live call customer support")
    return MdModel(MdConfig(len(v), dim=dim, hidden=hidden, width_dim=3, **kw), v)


def brute_spans(n, L):
    return sorted((i, j) for i in range(n + 1) for j in range(n + 1) if i < j and j - i <= L)


@pytest.mark.parametrize("n, L, count", [(5, 5, 15), (5, 2, 9), (0, 5, 0), (1, 1, 1)])
def test_enumerate_span_counts(n, L, count):
    assert len(enumerate_spans(n, L)) == count


@given(st.integers(0, 12), st.integers(1, 6))
def test_enumerate_spans_matches_brute_force(n, L):
    assert enumerate_spans(n, L) == brute_spans(n, L)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.randoms(use_true_random=False))
def test_span_scores_are_independent(n, rnd):
    model = tiny()
    ids = torch.tensor([[rnd.randrange(len(model.vocab)) for _ in range(n)]])
    reps = model.token_reps(ids)[0].detach()
    spans = enumerate_spans(n, 5)
    full = dict(zip(spans, score_spans(model, reps, spans)))
    subset = rnd.sample(spans, rnd.randint(1, len(spans)))
    rnd.shuffle(subset)
    for sp, s in zip(subset, score_spans(model, reps, subset)):
        assert s == pytest.approx(full[sp], abs=1e-6)


def test_detect_model_is_threshold_set():
    model = tiny(seed=3)
    toks = "how big is this house".split()
    reps = model.token_reps(torch.tensor([model.vocab.encode(toks)]))[0].detach()
    spans = enumerate_spans(len(toks), 5)
    scores = score_spans(model, reps, spans)
    for tau in (0.3, 0.5, 0.7):
        model.config.threshold = tau
        got = {m.span for m in detect_model(model, toks)}
        assert got == {sp for sp, s in zip(spans, scores) if s >= tau}
        assert all(m.provenance is Provenance.MODEL for m in detect_model(model, toks))
    assert detect_model(model, toks) == detect_model(model, toks)


def test_finite_difference_gradients():
    model = tiny(dim=3, hidden=3).double()
    ex = [MdExample(["how", "big", "house"], [(2, 3)])]
    assert finite_difference_check(model, lambda: span_loss(model, ex)) == []


def test_single_example_overfit():
    model = tiny(dim=16, hidden=16)
    ex = [MdExample("where does he live".split(), [(2, 3)])]
    _, report = train_md(model, ex, cfg=TrainConfig(epochs=10, batch_size=1, lr=1e-2))
    assert all(b < a for a, b in zip(report.losses, report.losses[1:]))


def test_empty_dataset_rejected():
    with pytest.raises(ValueError, match="empty"):
        train_md(tiny(), [])


class TestRules:
    def test_customer_support(self):
        ents = [screen("s1", "phone_number", ["Customer Support", "1-800-555-0100"])]
        (m,) = detect_rules(tokens("Call customer support"), ents)
        assert (m.span, m.text, m.rule_candidate_entity, m.provenance, m.score) == \
            ((1, 3), "customer support", "s1", Provenance.RULE, 1.0)

    def test_no_match(self):
        assert detect_rules(tokens("what time is it"), [screen("s1", "url", ["example.com"])]) == []

    def test_longest_match_wins(self):
        ents = [screen("a", "business", ["Support"]), screen("b", "phone_number", ["Customer Support"])]
        (m,) = detect_rules(tokens("call customer support"), ents)
        assert m.text == "customer support" and m.rule_candidate_entity == "b"

    def test_whole_tokens_only(self):
        assert detect_rules(tokens("call the category manager"), [screen("a", "person", ["cat"])]) == []

    def test_shared_text_has_no_link(self):
        ents = [background("a", "alarm", ["alarm"]), background("b", "alarm", ["Alarm"])]
        (m,) = detect_rules(tokens("stop the alarm"), ents)
        assert m.rule_candidate_entity is None

    def test_each_position_used_once(self):
        ents = [screen("a", "business", ["blue bottle"]), screen("b", "business", ["bottle shop"])]
        got = detect_rules(tokens("blue bottle shop"), ents)
        assert [m.span for m in got] == [(0, 2)]


@settings(max_examples=60)
@given(st.lists(st.sampled_from("a b c d e".split()), max_size=10),
       st.lists(st.lists(st.sampled_from("a b c d e".split()), min_size=1, max_size=3), max_size=5))
def test_rule_mentions_always_match_an_entity_text(utt, texts):
    ents = [background(f"e{i}", "other", [" ".join(t)]) for i, t in enumerate(texts)]
    found = detect_rules(utt, ents)
    covered = [i for m in found for i in range(m.start, m.end)]
    assert len(covered) == len(set(covered))
    for m in found:
        assert any(normalize(t) == m.text for e in ents for t in e.texts)
        if m.rule_candidate_entity is not None:
            assert m.text in [normalize(t) for t in next(e for e in ents if e.id == m.rule_candidate_entity).texts]


class TestMerge:
    def test_disjoint(self):
        a = [Mention(3, 4, "it")]
        b = [Mention(0, 2, "the one", Provenance.RULE)]
        assert [m.span for m in merge_mentions(a, b)] == [(0, 2), (3, 4)]

    def test_duplicate_keeps_rule(self):
        a = [Mention(1, 3, "customer support", Provenance.MODEL, 0.9)]
        b = [Mention(1, 3, "customer support", Provenance.RULE, 1.0, "s1")]
        (m,) = merge_mentions(a, b)
        assert m.provenance is Provenance.RULE and m.rule_candidate_entity == "s1"

    def test_overlap_kept(self):
        a = [Mention(0, 2, "this house")]
        b = [Mention(1, 2, "house", Provenance.RULE)]
        assert len(merge_mentions(a, b)) == 2


def test_detect_without_model_is_rules_only():
    ents = [screen("s1", "phone_number", ["Customer Support"])]
    assert [m.span for m in detect(None, tokens("call customer support"), ents)] == [(1, 3)]
    assert detect(None, tokens("call customer support"), ents, use_rules=False) == []


def test_random_rule_suite_has_no_false_links():
    """A spread of utterances built around entity names, including shorter-name traps."""
    rnd = random.Random(0)
    names = ["john", "john smith", "blue bottle", "blue bottle coffee", "main street", "customer support"]
    for _ in range(100):
        picked = rnd.sample(names, 3)
        ents = [screen(f"s{i}", "business", [n.title()], y=0.1 * i) for i, n in enumerate(picked)]
        target = rnd.choice(picked)
        utt = tokens(f"please call {target} now")
        for m in detect_rules(utt, ents):
            linked = next(e for e in ents if e.id == m.rule_candidate_entity)
            assert normalize(linked.texts[0]) == m.text
            longer = [n for n in picked if n != m.text and m.text in n and n in " ".join(utt)]
            assert not longer
