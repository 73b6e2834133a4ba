"""Template generator for query-rewrite pairs (AER, CbR and None classes)."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..core import ConversationTurn, RewriteClass, Speaker
from ..rewriter import QrExample
from . import lexicon as lx

CLASS_WEIGHTS = {RewriteClass.AER: 40, RewriteClass.CBR: 30, RewriteClass.NONE: 30}

CORRECTION_PREFIXES = ("i meant", "i said", "no", "no i said", "no i meant", "sorry i meant", "i mean", "not that")

_COUNTRY = {c: (cap, cur, lang) for c, cap, cur, lang in lx.COUNTRIES}
_STATE = dict(lx.STATES)


@dataclass(frozen=True)
class Relation:
    """A question about a place: full form, pronoun form, and an answer."""

    name: str
    full: str
    pronoun: str
    countries_only: bool = False

    def ask(self, place: str) -> str:
        return self.full.format(x=place)


RELATIONS = (
    Relation("capital", "what is the capital of {x}", "what is its capital", True),
    Relation("currency", "what currency does {x} use", "what currency does it use", True),
    Relation("language", "what language do they speak in {x}", "what language do they speak there", True),
    Relation("population", "what is the population of {x}", "what is its population"),
    Relation("time", "what time is it in {x}", "what time is it there"),
    Relation("weather", "what's the weather like in {x}", "what's the weather like there"),
    Relation("size", "how big is {x}", "how big is it"),
    Relation("flights", "show me flights to {x}", "show me flights there"),
)

# Follow-ups about the place named in the agent's answer; "it"/"there" stand for it.
ANSWER_ANAPHORA = (
    ("how far away is it", "how far away is {x}"),
    ("how far is it from here", "how far is {x} from here"),
    ("what's the weather like there", "what's the weather like in {x}"),
    ("how many people live there", "how many people live in {x}"),
    ("show me hotels there", "show me hotels in {x}"),
    ("what time is it there", "what time is it in {x}"),
    ("take me there", "take me to {x}"),
    ("how long is the drive there", "how long is the drive to {x}"),
)

ELLIPSIS_LEADS = ("what about", "how about", "and", "what about in", "and for")

STANDALONE = (
    "set a timer for {n} minutes", "turn on the lights", "tell me a joke", "what's on my calendar today",
    "remind me to buy milk", "play some music", "what day is it", "good morning", "set an alarm for {n} am",
    "how many ounces are in a cup", "what is {n} times {m}", "turn off the tv", "call mom",
    "what's the news today", "how tall is mount everest", "open the camera",
)


def _places(rng: random.Random, countries_only: bool) -> str:
    if countries_only or rng.random() < 0.5:
        return rng.choice(lx.COUNTRIES)[0]
    return rng.choice(lx.STATES)[0] if rng.random() < 0.5 else rng.choice(lx.CITIES)


def _answer(rel: Relation, place: str, rng: random.Random) -> str:
    if rel.name == "capital":
        return f"the capital of {place} is {_COUNTRY[place][0]}."
    if rel.name == "currency":
        return f"{place} uses the {_COUNTRY[place][1]}."
    if rel.name == "language":
        return f"people in {place} mostly speak {_COUNTRY[place][2]}."
    if rel.name == "population":
        return f"{place} has about {rng.randint(1, 90)} million people."
    if rel.name == "time":
        return f"it is {rng.randint(1, 12)}:{rng.choice(['00', '15', '30', '45'])} in {place}."
    if rel.name == "weather":
        return f"it is {rng.randint(-5, 35)} degrees and {rng.choice(['sunny', 'cloudy', 'rainy'])} in {place}."
    if rel.name == "size":
        return f"{place} covers about {rng.randint(2, 900)} thousand square kilometers."
    return f"here are flights to {place}."


def _punct(rng: random.Random) -> str:
    return "?" if rng.random() < 0.5 else ""


def _turns(*pairs: tuple[Speaker, str]) -> list[ConversationTurn]:
    return [ConversationTurn(s, u, (), i + 1) for i, (s, u) in enumerate(pairs)]


def _aer(rng: random.Random) -> QrExample:
    q = _punct(rng)
    kind = rng.choice(("answer", "subject", "ellipsis", "ellipsis"))
    if kind == "answer":
        # A capital named by the agent, referred back to with "it"/"there".
        if rng.random() < 0.5:
            region, capital = rng.choice(lx.STATES)
        else:
            region, capital = rng.choice(lx.COUNTRIES)[:2]
        turns = _turns((Speaker.USER, f"what is the capital of {region}"),
                       (Speaker.AGENT, f"{capital} is the capital of {region}."))
        dep, full = rng.choice(ANSWER_ANAPHORA)
        return QrExample(turns, dep + q, full.format(x=capital) + q, RewriteClass.AER)
    if kind == "subject":
        first, second = rng.sample(RELATIONS, 2)
        strict = first.countries_only or second.countries_only
        place = _places(rng, strict)
        turns = _turns((Speaker.USER, first.ask(place)), (Speaker.AGENT, _answer(first, place, rng)))
        return QrExample(turns, second.pronoun + q, second.ask(place) + q, RewriteClass.AER)
    rel = rng.choice(RELATIONS)
    a = _places(rng, rel.countries_only)
    b = _places(rng, rel.countries_only)
    while b == a:
        b = _places(rng, rel.countries_only)
    turns = _turns((Speaker.USER, rel.ask(a)), (Speaker.AGENT, _answer(rel, a, rng)))
    return QrExample(turns, f"{rng.choice(ELLIPSIS_LEADS)} {b}{q}", rel.ask(b) + q, RewriteClass.AER)


def _cbr(rng: random.Random) -> QrExample:
    q = _punct(rng)
    if rng.random() < 0.6:
        intended, heard = rng.choice(lx.CONFUSABLE)
        if rng.random() < 0.5:
            intended, heard = heard, intended
        countries = intended in _COUNTRY and heard in _COUNTRY
    else:
        countries = rng.random() < 0.5
        intended = _places(rng, countries)
        heard = _places(rng, countries)
        while heard == intended:
            heard = _places(rng, countries)
    rel = rng.choice([r for r in RELATIONS if countries or not r.countries_only])
    turns = _turns((Speaker.USER, rel.ask(heard)), (Speaker.AGENT, _answer(rel, heard, rng)))
    return QrExample(turns, f"{rng.choice(CORRECTION_PREFIXES)} {intended}{q}", rel.ask(intended) + q,
                     RewriteClass.CBR)


def _none(rng: random.Random) -> QrExample:
    q = _punct(rng)
    turns: list[ConversationTurn] = []
    if rng.random() < 0.6:
        rel = rng.choice(RELATIONS)
        place = _places(rng, rel.countries_only)
        turns = _turns((Speaker.USER, rel.ask(place)), (Speaker.AGENT, _answer(rel, place, rng)))
    if rng.random() < 0.6:
        rel = rng.choice(RELATIONS)
        query = rel.ask(_places(rng, rel.countries_only))
    else:
        query = rng.choice(STANDALONE).format(n=rng.randint(2, 12), m=rng.randint(2, 12))
    return QrExample(turns, query + q, query + q, RewriteClass.NONE)


def qr_pair(rng: random.Random) -> QrExample:
    cls = rng.choices(list(CLASS_WEIGHTS), list(CLASS_WEIGHTS.values()))[0]
    return {RewriteClass.AER: _aer, RewriteClass.CBR: _cbr, RewriteClass.NONE: _none}[cls](rng)
