"""Random entity construction for each category."""

from __future__ import annotations

import random

from ..core import BoundingBox, Category, Entity, EntityLocation, Source
from . import lexicon as lx

GRID_ROWS, GRID_COLS = 6, 2


def person_name(rng: random.Random) -> str:
    return f"{rng.choice(lx.FIRST_NAMES)} {rng.choice(lx.LAST_NAMES)}"


def street(rng: random.Random) -> str:
    return f"{rng.choice(lx.STREET_NAMES)} {rng.choice(lx.STREET_SUFFIXES)}"


def address(rng: random.Random, street_name: str | None = None) -> str:
    return f"{rng.randint(10, 9899)} {street_name or street(rng)}"


def phone(rng: random.Random) -> str:
    return f"({rng.randint(201, 989)}) 555-{rng.randint(0, 9999):04d}"


def business_name(rng: random.Random, kind: str | None = None) -> str:
    kind = kind or rng.choice(list(lx.BUSINESS_KINDS))
    return f"{rng.choice(lx.BUSINESS_STEMS)} {rng.choice(lx.BUSINESS_KINDS[kind])}"


def song(rng: random.Random) -> str:
    return f"{rng.choice(lx.SONG_WORDS_A)} {rng.choice(lx.SONG_WORDS_B)}"


def clock(rng: random.Random) -> str:
    return f"{rng.randint(1, 12)}:{rng.choice(['00', '15', '30', '45'])} {rng.choice(['am', 'pm'])}"


def texts_for(category: Category, rng: random.Random) -> tuple[str, ...]:
    c = Category(category)
    if c is Category.PHONE_NUMBER:
        return (rng.choice(lx.PHONE_LABELS).title(), phone(rng))
    if c is Category.EMAIL:
        first, last = rng.choice(lx.FIRST_NAMES), rng.choice(lx.LAST_NAMES)
        return (f"{first}.{last}@{rng.choice(lx.EMAIL_DOMAINS)}",)
    if c is Category.ADDRESS:
        return (address(rng).title(),)
    if c is Category.URL:
        return (f"www.{rng.choice(lx.URL_WORDS)}{rng.choice(lx.URL_WORDS)}.com",)
    if c is Category.BUSINESS:
        return (business_name(rng).title(), address(rng).title())
    if c is Category.PERSON:
        return (person_name(rng).title(),)
    if c is Category.MUSIC:
        return (song(rng).title(), person_name(rng).title())
    if c is Category.MOVIE:
        return (rng.choice(lx.MOVIE_WORDS).title(),)
    if c is Category.ALARM:
        return (f"{clock(rng)} alarm", rng.choice(["wake up", "gym", "meeting", "school run", "medication"]))
    if c is Category.TIMER:
        return (f"{rng.randint(2, 59)} minute timer", rng.choice(["pasta", "laundry", "oven", "tea", "workout"]))
    if c is Category.NOTIFICATION:
        return (f"message from {person_name(rng)}",)
    return (f"{rng.randint(1, 5)} bedroom {rng.choice(lx.HOUSE_THINGS)} on {street(rng)}",)


BACKGROUND_META = {
    Category.ALARM: {"firing": "true"},
    Category.TIMER: {"firing": "true"},
    Category.MUSIC: {"playing": "true"},
    Category.MOVIE: {"playing": "true"},
    Category.NOTIFICATION: {"unread": "true"},
}


def grid_box(cell: int) -> BoundingBox:
    row, col = divmod(cell, GRID_COLS)
    return BoundingBox(col / GRID_COLS + 0.02, row / GRID_ROWS + 0.01, 1 / GRID_COLS - 0.04, 1 / GRID_ROWS - 0.02)


def screen_entity(eid: str, category: Category, cell: int, rng: random.Random,
                  texts: tuple[str, ...] | None = None) -> Entity:
    return Entity(eid, category, texts or texts_for(category, rng),
                  EntityLocation(screen_box=grid_box(cell)), Source.SCREEN)


def background_entity(eid: str, category: Category, rng: random.Random) -> Entity:
    return Entity(eid, category, texts_for(category, rng), EntityLocation(), Source.BACKGROUND,
                  BACKGROUND_META.get(Category(category), {}))


def conversational_entity(eid: str, category: Category, rng: random.Random,
                          texts: tuple[str, ...] | None = None,
                          index: int | None = None, length: int | None = None) -> Entity:
    loc = EntityLocation(list_index=index, list_length=length) if index is not None else EntityLocation()
    return Entity(eid, category, texts or texts_for(category, rng), loc, Source.CONVERSATIONAL)
