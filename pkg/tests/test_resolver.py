import random

import pytest
import torch
from hypothesis import given, settings, strategies as st

from dialogref.core import ConversationTurn, Mention, Provenance, Speaker
from dialogref.instrument import Counters
from dialogref.resolver import (
    LOCATION_DIM, MrConfig, MrExample, MrModel, aggregate, location_features, make_batch, pair_loss,
    resolve, resolve_model, score_category, score_entities, score_location, score_text, train_mr,
)
from dialogref.text import tokens
from dialogref.training import TrainConfig

from helpers import background, convo, finite_difference_check, listed, screen, vocab_of

WORDS = "call the second one share that address with john this number bottom last homestead road 555"


def tiny(dim=8, hidden=8, seed=0):
    torch.manual_seed(seed)
    v = vocab_of(WORDS)
    return MrModel(MrConfig(len(v), dim=dim, hidden=hidden, category_dim=4), v)


def zeroed():
    model = tiny()
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    return model


def scene():
    return [
        screen("s1", "phone_number", ["Main Office", "555 0100"], y=0.1),
        screen("s2", "address", ["12 Homestead Road"], y=0.4),
        screen("s3", "url", ["example.com"], y=0.7),
    ]


REQ = tokens("share that address with john")
SPAN = (1, 3)


class TestLocationFeatures:
    def test_fixed_width_and_ranges(self):
        ents = scene() + [listed("c1", "business", ["Shop"], 2, 4), background("b", "alarm", ["alarm"])]
        for e in ents:
            f = location_features(e, ents)
            assert len(f) == LOCATION_DIM
            assert all(0.0 <= v <= 1.0 for v in f)

    def test_list_layout(self):
        f = location_features(listed("c", "business", ["x"], 4, 4))
        assert f[6] == 1.0 and f[7] == 0.0 and f[8] == 1.0 and f[9 + 3] == 1.0

    def test_background_flag(self):
        f = location_features(background("b", "alarm", ["alarm"]))
        assert f[21] == 1.0 and sum(f) == 1.0

    def test_extremal_flags_relative_to_peers(self):
        ents = scene()
        assert location_features(ents[0], ents)[22] == 1.0   # topmost
        assert location_features(ents[2], ents)[23] == 1.0   # bottommost
        assert location_features(ents[1], ents)[22:24] == [0.0, 0.0]


class TestZeroInit:
    def test_modules_score_half(self):
        model, e = zeroed(), scene()[1]
        assert score_category(model, REQ, SPAN, e) == 0.5
        assert score_location(model, REQ, SPAN, e) == 0.5
        assert score_text(model, REQ, SPAN, e) == 0.5

    def test_uniform_weights_average(self):
        model = zeroed()
        assert aggregate(model, REQ, 0.2, 0.5, 0.8) == pytest.approx(0.5, abs=1e-7)
        assert aggregate(model, REQ, 0.1, 0.1, 0.7) == pytest.approx(0.3, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_aggregate_is_convex(seed, a, b, c):
    model = tiny(seed=seed)
    s = aggregate(model, REQ, a, b, c)
    assert min(a, b, c) - 1e-6 <= s <= max(a, b, c) + 1e-6
    assert aggregate(model, REQ, a, a, a) == pytest.approx(a, abs=1e-6)


def test_one_hot_weights_select_a_module():
    model = tiny()
    with torch.no_grad():
        model.weight_head.weight.zero_()
        model.weight_head.bias.copy_(torch.tensor([60.0, 0.0, 0.0]))
    assert aggregate(model, REQ, 0.9, 0.1, 0.3) == pytest.approx(0.9, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.sampled_from(WORDS.split()), min_size=1, max_size=8))
def test_weight_simplex(seed, request_tokens):
    model = tiny(seed=seed)
    ents = scene()
    out = score_entities(model, request_tokens, (0, 1), ents)
    w = out["weights"]
    assert float(w.sum()) == pytest.approx(1.0, abs=1e-6)
    assert bool((w > 0).all())
    lo, hi = out["modules"].min(-1).values, out["modules"].max(-1).values
    assert bool(((out["score"] >= lo - 1e-6) & (out["score"] <= hi + 1e-6)).all())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_permutation_equivariance(seed, rnd):
    model = tiny(seed=seed)
    ents = scene() + [listed("c1", "business", ["Homestead Cafe"], 1, 2), background("b", "alarm", ["alarm"])]
    base = dict(zip((e.id for e in ents), score_entities(model, REQ, SPAN, ents)["score"].tolist()))
    perm = ents[:]
    rnd.shuffle(perm)
    got = score_entities(model, REQ, SPAN, perm)["score"].tolist()
    for e, s in zip(perm, got):
        assert s == pytest.approx(base[e.id], abs=1e-6)


def test_duplicates_score_identically():
    model = tiny(seed=5)
    a = background("a", "music", ["song two"])
    b = background("b", "music", ["song two"])
    ents = [a, convo("x", "person", ["john"]), b]
    res = resolve_model(model, Mention(1, 3, "that address"), ents, REQ)
    s = score_entities(model, REQ, SPAN, ents)["score"]
    assert float(s[0]) == float(s[2])
    ids = res.entity_ids
    assert ("a" in ids) == ("b" in ids)


def test_resolve_model_threshold():
    model = tiny(seed=1)
    ents = scene()
    scores = score_entities(model, REQ, SPAN, ents)["score"].tolist()
    for tau in (0.01, 0.5, 0.99):
        model.config.threshold = tau
        res = resolve_model(model, Mention(*SPAN, "that address"), ents, REQ)
        assert set(res.entity_ids) == {e.id for e, s in zip(ents, scores) if s >= tau}
        assert all(s >= tau for _, s in res.matches)
        assert res.resolver is Provenance.MODEL


def test_finite_difference_gradients():
    model = tiny(dim=3, hidden=3).double()
    ex = [MrExample(tokens("share that address"), (1, 3),
                    [screen("s1", "address", ["homestead road"]), screen("s2", "url", ["555"], y=0.5)],
                    frozenset({"s1"}))]
    assert finite_difference_check(model, lambda: pair_loss(model, ex)) == []


def test_single_example_overfit():
    model = tiny(dim=16, hidden=16)
    ex = [MrExample(REQ, SPAN, scene(), frozenset({"s2"}))]
    _, report = train_mr(model, ex, cfg=TrainConfig(epochs=10, batch_size=1, lr=1e-2))
    assert all(b < a for a, b in zip(report.losses, report.losses[1:]))
    assert resolve_model(model, Mention(*SPAN, "that address"), scene(), REQ).entity_ids == ["s2"]


def test_examples_need_candidates():
    with pytest.raises(ValueError):
        MrExample(REQ, SPAN, [], frozenset())
    with pytest.raises(ValueError, match="empty"):
        train_mr(tiny(), [])


class TestShortCircuit:
    def test_ordinal_skips_model(self):
        counters = Counters()
        ents = [listed(f"c{i}", "business", [f"shop {i}"], i, 3) for i in (1, 2, 3)]
        turns = [ConversationTurn(Speaker.AGENT, "here", tuple(e.id for e in ents), 1)]
        req = tokens("call the second one")
        res = resolve(Mention(1, 4, "the second one"), ents, req, tiny(), turns=turns, counters=counters)
        assert res.resolver is Provenance.RULE and res.entity_ids == ["c2"]
        assert counters["mr_model"] == 0

    def test_descriptive_mention_uses_model(self):
        counters = Counters()
        ents = [listed(f"c{i}", "business", [f"shop {i}", f"{i} homestead road"], i, 3) for i in (1, 2, 3)]
        req = tokens("get directions to the one on homestead road")
        res = resolve(Mention(3, 8, "the one on homestead road"), ents, req, tiny(), counters=counters)
        assert res.resolver is Provenance.MODEL
        assert counters["mr_model"] == 1

    def test_no_entities(self):
        counters = Counters()
        res = resolve(Mention(1, 2, "it"), [], ["stop", "it"], tiny(), counters=counters)
        assert res.matches == () and res.resolver is Provenance.RULE
        assert counters["mr_model"] == 0


def test_batch_masks_padding_candidates():
    model = tiny()
    b = make_batch(model, [(REQ, SPAN, scene()), (REQ, SPAN, scene()[:1])])
    assert b.candidates.tolist() == [[True, True, True], [True, False, False]]


# -- trained on the generated corpora -------------------------------------------------

def _module_rank_rate(samples, models, module):
    """Fraction of samples whose gold entity gets the top score from ``module``."""
    hits = total = 0
    for s in samples:
        for m in s.mentions:
            mods = score_entities(models.mr, s.tokens, (m.start, m.end), s.entities)["modules"][:, module]
            top = s.entities[int(mods.argmax())].id
            hits += top in m.gold_ids
            total += 1
    return hits / total, total


@pytest.mark.slow
def test_category_module_prefers_phone_numbers(trained, corpora):
    models = trained["screen"]
    req = tokens("call this number")
    phone, addr = screen("p", "phone_number", ["Main Office"]), screen("a", "address", ["1 Oak Street"], y=0.5)
    s_phone = score_category(models.mr, req, (1, 3), phone)
    assert s_phone >= 0.5
    assert score_category(models.mr, req, (1, 3), addr) < s_phone


@pytest.mark.slow
def test_location_module_finds_the_bottom_item(trained, corpora):
    samples = [s for s in corpora["screen"]["test"]
               if s.template == "location" and s.mentions[0].ref.get("pick") == "max"]
    rate, n = _module_rank_rate(samples, trained["screen"], 1)
    assert n > 50 and rate >= 0.95


@pytest.mark.slow
def test_location_module_finds_the_last_item(trained, corpora):
    samples = [s for s in corpora["conversational"]["test"]
               if s.template == "ordinal" and s.mentions[0].ref.get("from_end") == 1]
    rate, n = _module_rank_rate(samples, trained["conversational"], 1)
    assert n > 30 and rate >= 0.95


@pytest.mark.slow
def test_text_module_matches_street(trained):
    models = trained["conversational"]
    ents = [listed("c1", "business", ["Harvest Cafe", "12 Oak Street"], 1, 3),
            listed("c2", "business", ["Lucky Penny Coffee", "88 Homestead Road"], 2, 3),
            listed("c3", "business", ["Zephyr Roasters", "5 Maple Avenue"], 3, 3)]
    req = tokens("call the one on homestead road")
    mods = score_entities(models.mr, req, (1, 6), ents)["modules"][:, 2]
    assert int(mods.argmax()) == 1
    res = resolve(Mention(1, 6, "the one on homestead road"), ents, req, models.mr)
    assert res.resolver is Provenance.MODEL and res.entity_ids == ["c2"]


@pytest.mark.slow
def test_share_that_address(trained):
    models = trained["synthetic"]
    rnd = random.Random(0)
    ents = [convo("a0", "address", ["41 Maple Street"]),
            background("n1", "music", ["Blue Sky"]), convo("n2", "phone_number", ["Front Desk", "555 0199"])]
    rnd.shuffle(ents)
    req = tokens("share that address with john")
    res = resolve(Mention(1, 3, "that address"), ents, req, models.mr)
    assert res.entity_ids == ["a0"]


def test_exact_overlap_sees_out_of_vocabulary_names():
    model = tiny()
    ents = [listed("c1", "business", ["Zephyr Roasters"], 1, 2), listed("c2", "business", ["Quokka Cafe"], 2, 2)]
    req = tokens("call zephyr roasters")
    assert "zephyr" not in model.vocab
    batch = make_batch(model, [(req, (1, 3), ents)])
    exact = model._alignment(batch, model.embedding(batch.text))[0, :, 0]
    assert exact.tolist() == [1.0, 0.0]
