"""Template generators for screen, conversational and mixed synthetic resolution data.

Every generator draws a target, builds distractors that cannot satisfy the
referring expression, and retries the draw until the independent checker in
:mod:`.verify` accepts the sample.
"""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Callable

from ..core import Category as C
from ..core import Entity
from . import lexicon as lx
from .entities import (
    GRID_COLS, GRID_ROWS, background_entity, business_name, conversational_entity,
    person_name, phone, screen_entity, street, texts_for,
)
from .samples import ResolutionSample, Utterance, agent_turn, fill, user_turn
from .verify import check

MAX_TRIES = 50

# Referring phrases that select by category.
CATEGORY_MENTIONS: dict[C, tuple[str, ...]] = {
    C.PHONE_NUMBER: ("this number", "that number", "this phone number", "that phone number"),
    C.EMAIL: ("this email", "that email address", "this email address"),
    C.ADDRESS: ("this address", "that address", "this location"),
    C.URL: ("this link", "that website", "this site", "that link"),
    C.BUSINESS: ("this place", "that place", "this business", "this store"),
    C.PERSON: ("this contact", "that person", "this person"),
    C.OTHER: ("this house", "this listing", "that home", "this property"),
}

# Request frames whose verb fits the category; ``{name}`` is a first name.
CATEGORY_REQUESTS: dict[C, tuple[str, ...]] = {
    C.PHONE_NUMBER: ("call {m}", "dial {m}", "save {m} to my contacts", "share {m} with {name}",
                     "text {m}", "add {m} to {name}'s contact card"),
    C.EMAIL: ("send an email to {m}", "share {m} with {name}", "copy {m}", "write to {m}"),
    C.ADDRESS: ("navigate to {m}", "get directions to {m}", "share {m} with {name}",
                "how far is {m}", "how long does it take to get to {m}"),
    C.URL: ("open {m}", "share {m} with {name}", "bookmark {m}", "send {m} to {name}"),
    C.BUSINESS: ("call {m}", "get directions to {m}", "what are the hours for {m}",
                 "share {m} with {name}", "is {m} open now"),
    C.PERSON: ("text {m}", "send a message to {m}", "share {m} with {name}", "email {m}"),
    C.OTHER: ("how big is {m}", "how much is {m}", "save {m}", "tell me more about {m}",
              "share {m} with {name}"),
}

SCREEN_CATEGORIES = (C.PHONE_NUMBER, C.EMAIL, C.ADDRESS, C.URL, C.BUSINESS, C.PERSON, C.OTHER)

NONE_REQUESTS = (
    "what time is it", "set a timer for {n} minutes", "what's the weather like today",
    "turn on the lights", "is it going to rain tomorrow", "how cold is it outside",
    "tell me a joke", "what's on my calendar today", "remind me to buy milk",
    "how tall is mount everest", "good morning", "thank you", "what day is it",
    "open the camera", "set an alarm for {n} am", "what's the news today",
    "how many ounces are in a cup", "is it sunny in {city}", "what is {n} times {n2}",
)


def _none_utterance(rng: random.Random) -> Utterance:
    template = rng.choice(NONE_REQUESTS)
    return Utterance().add(template.format(n=rng.randint(2, 12), n2=rng.randint(2, 12), city=rng.choice(lx.CITIES)))


QUESTION_WORDS = frozenset("how what what's who where when which is are can do does".split())


def _punctuate(sample: ResolutionSample, rng: random.Random) -> ResolutionSample:
    """Typed requests often end in "?" or "."; appending keeps every gold span in place."""
    if rng.random() >= 0.3:
        return sample
    mark = "?" if sample.utterance.split(" ", 1)[0] in QUESTION_WORDS else "."
    return replace(sample, utterance=sample.utterance + mark)


def _retry(gen: Callable[[random.Random], ResolutionSample | None], rng: random.Random) -> ResolutionSample:
    for _ in range(MAX_TRIES):
        sample = gen(rng)
        if sample is not None and not check(sample):
            return _punctuate(sample, rng)
    raise RuntimeError("template generator failed to produce a verifiable sample")


def _name(rng: random.Random) -> str:
    return rng.choice(lx.FIRST_NAMES)


# -- screen ---------------------------------------------------------------------


def _screen_scene(rng: random.Random, target_cat: C, n: int, exclude: set[C]) -> tuple[list[Entity], Entity]:
    cells = rng.sample(range(GRID_ROWS * GRID_COLS), n)
    others = [c for c in SCREEN_CATEGORIES if c not in exclude]
    cats = [target_cat] + [rng.choice(others) for _ in range(n - 1)]
    ents = [screen_entity(f"s{i}", cat, cell, rng) for i, (cat, cell) in enumerate(zip(cats, cells))]
    target = ents[0]
    rng.shuffle(ents)
    return ents, target


def _screen_once(rng: random.Random) -> ResolutionSample | None:
    mode = rng.choices(("category", "location", "name", "text", "two", "none"), (40, 20, 12, 10, 8, 10))[0]
    n = rng.randint(2, 6)
    if mode == "none":
        ents, _ = _screen_scene(rng, rng.choice(SCREEN_CATEGORIES), n, set())
        u = _none_utterance(rng)
        return ResolutionSample(u.text(), [], ents, [], "screen", "none")

    if mode == "category":
        cat = rng.choice(SCREEN_CATEGORIES)
        ents, target = _screen_scene(rng, cat, n, {cat})
        ref = {"kind": "category", "categories": [cat.value]}
        u = fill(rng.choice(CATEGORY_REQUESTS[cat]), rng, [target.id], ref,
                 rng.choice(CATEGORY_MENTIONS[cat]), name=_name(rng))
        return ResolutionSample(u.text(), u.mentions, ents, [], "screen", "category")

    if mode == "location":
        cat = rng.choice(SCREEN_CATEGORIES)
        ents, target = _screen_scene(rng, cat, n, set())
        rows = {e.id: e.location.screen_box.center_y for e in ents}
        pick = rng.choice(("min", "max"))
        extreme = (min if pick == "min" else max)(rows.values())
        if [e.id for e in ents if rows[e.id] == extreme] != [target.id]:
            # Move the target into a row of its own beyond every distractor.
            used = {divmod(_cell_of(e), GRID_COLS)[0] for e in ents if e.id != target.id}
            free_rows = [r for r in range(GRID_ROWS) if (r < min(used) if pick == "min" else r > max(used))]
            if not free_rows:
                return None
            row = rng.choice(free_rows)
            moved = screen_entity(target.id, target.category, row * GRID_COLS + rng.randrange(GRID_COLS), rng, target.texts)
            ents = [moved if e.id == target.id else e for e in ents]
            target = moved
        word = "top" if pick == "min" else "bottom"
        mention = rng.choice((f"the {word} one", f"the one at the {word}", f"the {word} item"))
        ref = {"kind": "extremal", "axis": "y", "pick": pick}
        u = fill(rng.choice(CATEGORY_REQUESTS[cat]), rng, [target.id], ref, mention, name=_name(rng))
        return ResolutionSample(u.text(), u.mentions, ents, [], "screen", "location")

    if mode == "name":
        cat = rng.choice((C.PHONE_NUMBER, C.BUSINESS, C.PERSON))
        ents, target = _screen_scene(rng, cat, n, set())
        name = target.texts[0]
        ref = {"kind": "name", "text": name}
        frame = {C.PHONE_NUMBER: ("call {m}", "dial {m}"),
                 C.BUSINESS: ("call {m}", "get directions to {m}", "is {m} open now"),
                 C.PERSON: ("text {m}", "send a message to {m}", "email {m}")}[cat]
        u = fill(rng.choice(frame), rng, [target.id], ref, name.lower())
        return ResolutionSample(u.text(), u.mentions, ents, [], "screen", "name")

    if mode == "text":
        cat = rng.choice((C.BUSINESS, C.ADDRESS))
        ents, target = _screen_scene(rng, cat, n, set())
        addr = target.texts[-1].lower()
        phrase = addr.split(" ", 1)[1]
        ref = {"kind": "text", "phrase": phrase}
        frame = ("get directions to {m}", "share {m} with {name}", "how far is {m}")
        u = fill(rng.choice(frame), rng, [target.id], ref, f"the one on {phrase}", name=_name(rng))
        return ResolutionSample(u.text(), u.mentions, ents, [], "screen", "text")

    # two mentions: an address shared with a contact
    ents, addr = _screen_scene(rng, C.ADDRESS, n if n >= 3 else 3, {C.ADDRESS, C.PERSON})
    person = next((e for e in ents if e.id != addr.id), None)
    if person is None:
        return None
    person = screen_entity(person.id, C.PERSON, _cell_of(person), rng)
    ents = [person if e.id == person.id else e for e in ents]
    u = Utterance().add("share")
    u.mention(rng.choice(CATEGORY_MENTIONS[C.ADDRESS]), [addr.id], {"kind": "category", "categories": ["address"]})
    u.add("with")
    u.mention(rng.choice(CATEGORY_MENTIONS[C.PERSON]), [person.id], {"kind": "category", "categories": ["person"]})
    return ResolutionSample(u.text(), u.mentions, ents, [], "screen", "two")


def _cell_of(e: Entity) -> int:
    b = e.location.screen_box
    return round((b.y - 0.01) * GRID_ROWS) * GRID_COLS + round((b.x - 0.02) * GRID_COLS)


def screen_sample(rng: random.Random) -> ResolutionSample:
    return _retry(_screen_once, rng)


# -- conversational lists ---------------------------------------------------------

LIST_REQUESTS = ("call {m}", "get directions to {m}", "what are the hours for {m}", "how far is {m}",
                 "tell me more about {m}", "is {m} open now", "show me {m} on the map")
LIST_PROMPTS = ("show me {kind} near me", "find {kind} nearby", "what {kind} are around here")
LIST_ANSWERS = ("here are some near you", "i found {n} {kind} nearby", "here are {n} options")


def _ordinal_mention(rng: random.Random, position: int, n: int) -> tuple[str, dict]:
    forms = [(f"the {lx.ORDINALS[position - 1]} one", {"kind": "ordinal", "position": position}),
             (f"the {lx.ORDINALS[position - 1]} result", {"kind": "ordinal", "position": position})]
    if position == n:
        forms += [("the last one", {"kind": "ordinal", "from_end": 1}),
                  ("the bottom one", {"kind": "ordinal", "from_end": 1})]
    if position == 1:
        forms += [("the top one", {"kind": "ordinal", "position": 1}),
                  ("the one at the top", {"kind": "ordinal", "position": 1})]
    if n >= 3 and position == n - 1:
        forms += [("the second to last one", {"kind": "ordinal", "from_end": 2})]
    return rng.choice(forms)


def _list_scene(rng: random.Random, first_ordinal: int = 1) -> tuple[list, list[Entity], str]:
    kind = rng.choice(list(lx.BUSINESS_KINDS))
    n = rng.randint(2, 5)
    ents = [
        conversational_entity(f"c{i}", C.BUSINESS, rng,
                              texts=(business_name(rng, kind).title(), f"{rng.randint(10, 9899)} {street(rng)}".title()),
                              index=i + 1, length=n)
        for i in range(n)
    ]
    turns = [
        user_turn(rng.choice(LIST_PROMPTS).format(kind=kind), first_ordinal),
        agent_turn(rng.choice(LIST_ANSWERS).format(kind=kind, n=n), first_ordinal + 1, [e.id for e in ents]),
    ]
    return turns, ents, kind


def _list_once(rng: random.Random, variant: str, allow_none: bool = True) -> ResolutionSample | None:
    turns, ents, _ = _list_scene(rng)
    n = len(ents)
    weights = (45, 15, 30, 10) if allow_none else (50, 17, 33, 0)
    mode = rng.choices(("ordinal", "name", "text", "none"), weights)[0]
    if mode == "none":
        u = _none_utterance(rng)
        return ResolutionSample(u.text(), [], ents, turns, variant, "none")
    position = rng.randint(1, n)
    target = ents[position - 1]
    if mode == "ordinal":
        mention, ref = _ordinal_mention(rng, position, n)
        u = fill(rng.choice(LIST_REQUESTS), rng, [target.id], ref, mention)
        return ResolutionSample(u.text(), u.mentions, ents, turns, variant, "ordinal")
    if mode == "name":
        name = target.texts[0]
        u = fill(rng.choice(("call {m}", "get directions to {m}", "is {m} open now")), rng,
                 [target.id], {"kind": "name", "text": name}, name.lower())
        return ResolutionSample(u.text(), u.mentions, ents, turns, variant, "name")
    phrase = target.texts[1].lower().split(" ", 1)[1]
    u = fill(rng.choice(("call {m}", "get directions to {m}", "what are the hours for {m}", "is {m} open now")),
             rng, [target.id], {"kind": "text", "phrase": phrase}, f"the one on {phrase}")
    return ResolutionSample(u.text(), u.mentions, ents, turns, variant, "text")


def conversational_sample(rng: random.Random) -> ResolutionSample:
    return _retry(lambda r: _list_once(r, "conversational"), rng)


# -- mixed synthetic: background, lists, anaphora ------------------------------------

BACKGROUND_FRAMES: dict[C, tuple[tuple[str, tuple[str, ...], tuple[str, ...]], ...]] = {
    # (request frame, mention options, referent categories)
    C.ALARM: (("switch {m} off", ("it", "that"), ("alarm", "timer")),
              ("turn {m} off", ("it", "that", "the alarm"), ("alarm", "timer")),
              ("stop {m}", ("it", "that", "the alarm", "this"), ("alarm", "timer")),
              ("snooze {m}", ("it", "that", "the alarm"), ("alarm", "timer"))),
    C.TIMER: (("switch {m} off", ("it", "that"), ("alarm", "timer")),
              ("turn {m} off", ("it", "that", "the timer"), ("alarm", "timer")),
              ("stop {m}", ("it", "that", "the timer"), ("alarm", "timer"))),
    C.MUSIC: (("pause {m}", ("it", "this", "that"), ("music", "movie")),
              ("resume {m}", ("it", "this"), ("music", "movie")),
              ("play {m} again", ("it", "this", "that"), ("music", "movie")),
              ("who sings {m}", ("this", "this song", "that song"), ("music",)),
              ("add {m} to my playlist", ("this song", "this", "it"), ("music",))),
    C.MOVIE: (("pause {m}", ("it", "this", "that"), ("music", "movie")),
              ("resume {m}", ("it", "this", "this movie"), ("music", "movie")),
              ("how long is {m}", ("this movie", "this film"), ("movie",))),
    C.NOTIFICATION: (("read {m}", ("it", "that", "this notification", "the message"), ("notification",)),
                     ("open {m}", ("this notification", "the message", "that message"), ("notification",)),
                     ("reply to {m}", ("it", "that", "the message"), ("notification",)),
                     ("dismiss {m}", ("this notification", "the notification"), ("notification",))),
}

BACKGROUND_CATS = tuple(BACKGROUND_FRAMES)

ANAPHORA_NEGATIVE_CATS = (C.PHONE_NUMBER, C.EMAIL, C.URL, C.MUSIC, C.NOTIFICATION, C.ALARM, C.PERSON, C.ADDRESS)


def _negatives(rng: random.Random, k: int, banned: set[str], start: int) -> list[Entity]:
    out = []
    for i in range(k):
        eid = f"n{start + i}"
        if rng.random() < 0.6:
            cat = rng.choice([c for c in BACKGROUND_CATS if c.value not in banned] or [C.NOTIFICATION])
            if cat.value in banned:
                continue
            out.append(background_entity(eid, cat, rng))
        else:
            cats = [c for c in ANAPHORA_NEGATIVE_CATS if c.value not in banned]
            out.append(conversational_entity(eid, rng.choice(cats), rng))
    return out


def _background_once(rng: random.Random) -> ResolutionSample | None:
    cat = rng.choice(BACKGROUND_CATS)
    frame, mentions, ref_cats = rng.choice(BACKGROUND_FRAMES[cat])
    target = background_entity("b0", cat, rng)
    ref = {"kind": "category", "categories": list(ref_cats)}
    negs = _negatives(rng, rng.randint(1, 4), set(ref_cats), 1)
    ents = [target] + negs
    rng.shuffle(ents)
    u = fill(frame, rng, [target.id], ref, rng.choice(mentions))
    return ResolutionSample(u.text(), u.mentions, ents, [], "synthetic", "background")


def _city_anaphora(rng):
    state, capital = rng.choice(lx.STATES)
    turns = [user_turn(rng.choice((f"what is the capital of {state}", f"what is {state}'s capital")), 1)]
    ent = conversational_entity("a0", C.OTHER, rng, texts=(capital.title(),))
    turns.append(agent_turn(f"{capital} is the capital of {state}.", 2, [ent.id]))
    frames = (("how far away is {m}", ("it",)), ("how far is {m} from here", ("it",)),
              ("what's the weather like {m}", ("there",)), ("how many people live {m}", ("there",)),
              ("show me hotels {m}", ("there",)), ("tell me more about {m}", ("it", "that city")))
    return turns, ent, frames, ("other", "address", "business")


def _address_anaphora(rng):
    first = rng.choice(lx.FIRST_NAMES)
    ent = conversational_entity("a0", C.ADDRESS, rng)
    turns = [user_turn(f"where is {first}'s office", 1),
             agent_turn(f"{first}'s office is at {ent.texts[0].lower()}.", 2, [ent.id])]
    others = [n for n in lx.FIRST_NAMES if n != first]
    frames = (("share {m} with " + rng.choice(others), ("that address", "it", "this address")),
              ("navigate to {m}", ("that address", "it", "there")),
              ("how long does it take to get {m}", ("there",)))
    return turns, ent, frames, ("address",)


def _person_anaphora(rng):
    ent = conversational_entity("a0", C.PERSON, rng)
    company = business_name(rng).title()
    turns = [user_turn(f"who runs {company.lower()}", 1),
             agent_turn(f"{ent.texts[0].lower()} runs {company.lower()}.", 2, [ent.id])]
    pron = rng.choice((("he", "him", "does"), ("she", "her", "does"), ("they", "them", "do")))
    frames = ((f"where {pron[2]} {{m}} live", (pron[0],)), ("text {m}", (pron[1],)),
              ("send a message to {m}", (pron[1], "that person")), ("how old is {m}", ("that person",)))
    return turns, ent, frames, ("person",)


def _phone_anaphora(rng):
    label = rng.choice(lx.PHONE_LABELS)
    ent = conversational_entity("a0", C.PHONE_NUMBER, rng, texts=(label.title(), phone(rng)))
    turns = [user_turn(f"what is the number for {label}", 1),
             agent_turn(f"the number is {ent.texts[1]}.", 2, [ent.id])]
    frames = (("save {m}", ("that number", "it")), ("share {m} with " + rng.choice(lx.FIRST_NAMES), ("that number", "it")),
              ("call {m}", ("that number", "it")))
    return turns, ent, frames, ("phone_number",)


def _anaphora_once(rng: random.Random) -> ResolutionSample | None:
    turns, target, frames, ref_cats = rng.choice(
        (_city_anaphora, _address_anaphora, _person_anaphora, _phone_anaphora))(rng)
    frame, mentions = rng.choice(frames)
    banned = set(ref_cats) | ({"business"} if frame.startswith("call") else set())
    negs = _negatives(rng, rng.randint(1, 4), banned, 1)
    ents = [target] + negs
    rng.shuffle(ents)
    ref = {"kind": "category", "categories": list(ref_cats)}
    u = fill(frame, rng, [target.id], ref, rng.choice(mentions))
    return ResolutionSample(u.text(), u.mentions, ents, turns, "synthetic", "anaphora")


def _synthetic_once(rng: random.Random) -> ResolutionSample | None:
    mode = rng.choices(("background", "list", "anaphora", "none"), (40, 30, 20, 10))[0]
    if mode == "background":
        return _background_once(rng)
    if mode == "list":
        return _list_once(rng, "synthetic", allow_none=False)
    if mode == "anaphora":
        return _anaphora_once(rng)
    ents = [background_entity(f"n{i}", rng.choice(BACKGROUND_CATS), rng) for i in range(rng.randint(1, 4))]
    u = _none_utterance(rng)
    return ResolutionSample(u.text(), [], ents, [], "synthetic", "none")


def synthetic_sample(rng: random.Random) -> ResolutionSample:
    return _retry(_synthetic_once, rng)


def person_entity_name(rng: random.Random) -> str:
    return person_name(rng)
