"""Fixture programs exercised by both the soundness harness and the CLI.

Each entry names a program, the initial variable assignments its concrete
runs start from, and whether a runtime error (matched by an analyzer alarm
or unproven assert) is expected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

FIXTURE_DIR = Path(__file__).parent / "fixtures"


@dataclass(frozen=True)
class Fixture:
    name: str
    source: str
    inits: tuple[dict[str, int], ...]
    expect_error: bool = False  # concrete runs end in a (matched) runtime error
    expect_unproven: tuple[str, ...] = ()  # substrings of unproven assert exprs

    @property
    def path(self) -> Path:
        return FIXTURE_DIR / f"{self.name}.hp"


FIXTURES: list[Fixture] = [
    Fixture(
        "straight_line",
        """
var x, y, z;
x = 1;
y = x + 2;
z = y - x;
assert(z == 2);
assert(y == 3);
""",
        ({}, {"x": 5}, {"z": -7}),
    ),
    Fixture(
        "branch_join",
        """
var x, y;
if (x == 0) {
  y = 1;
} else {
  y = 2;
}
assert(y >= 1);
assert(y <= 2);
""",
        ({"x": 0}, {"x": 1}, {"x": -3}),
    ),
    Fixture(
        "nested_branch",
        """
var a, b, r;
if (a < 0) {
  r = 0 - 1;
} else {
  if (b < a) {
    r = 1;
  } else {
    r = 0;
  }
}
assert(r <= 1);
""",
        ({"a": -1, "b": 0}, {"a": 2, "b": 1}, {"a": 2, "b": 5}),
    ),
    Fixture(
        "alias_star",
        """
var x, y, z, c;
if (c) {
  x = &y;
} else {
  x = &z;
}
*x = 5;
assert(x != 0);
assert(*x == 5);
""",
        ({"c": 0}, {"c": 1}, {"c": 9}),
    ),
    Fixture(
        "build",
        """
var x, t, n;
x = 0;
while (n > 0) {
  t = malloc{next, d};
  t->next = x;
  x = t;
  n = n - 1;
}
assert(n <= 0);
""",
        ({"n": 0}, {"n": 1}, {"n": 3}),
    ),
    Fixture(
        "build_reverse",
        """
var h, r, x, t, n;
h = 0;
while (n > 0) {
  t = malloc{next, d};
  t->next = h;
  h = t;
  n = n - 1;
}
r = 0;
x = h;
h = 0;
t = 0;
while (x != 0) {
  t = x->next;
  x->next = r;
  r = x;
  x = t;
}
assert(x == 0);
""",
        ({"n": 0}, {"n": 1}, {"n": 3}),
    ),
    Fixture(
        "update_reverse",
        """
var h, r, x, t, n;
h = 0;
while (n > 0) {
  t = malloc{next, d};
  t->next = h;
  h = t;
  n = n - 1;
}
r = 0;
x = h;
h = 0;
t = 0;
while (x != 0) {
  x->d = 7;
  t = x->next;
  x->next = r;
  r = x;
  x = t;
}
""",
        ({"n": 0}, {"n": 1}, {"n": 3}),
    ),
    Fixture(
        "free_all",
        """
var h, n, t;
h = 0;
while (n > 0) {
  t = malloc{next, d};
  t->next = h;
  h = t;
  n = n - 1;
}
while (h != 0) {
  t = h;
  h = h->next;
  free(t);
}
assert(h == 0);
""",
        ({"n": 0}, {"n": 1}, {"n": 2}),
    ),
    Fixture(
        "rebuild",
        """
var h, n, t;
h = 0;
while (n > 0) {
  t = malloc{next, d};
  t->next = h;
  h = t;
  n = n - 1;
}
while (h != 0) {
  t = h;
  h = h->next;
  free(t);
}
h = 0;
t = malloc{next, d};
t->next = h;
h = t;
""",
        ({"n": 0}, {"n": 1}, {"n": 2}),
    ),
    Fixture(
        "counter",
        """
var i, s;
i = 0;
while (i < 10) {
  i = i + 1;
}
assert(i >= 10);
""",
        ({"s": 0}, {"s": 1}, {"s": 2}),
    ),
    Fixture(
        "single_block",
        """
var p;
p = malloc{a, b};
p->a = 1;
p->b = p->a + 2;
assert(p->b == 3);
free(p);
""",
        ({}, {"p": 4}, {"p": -1}),
    ),
    Fixture(
        "empty_traverse",
        """
var x;
x = 0;
while (x != 0) {
  x = x->next;
}
assert(x == 0);
""",
        ({}, {"x": 1}, {"x": 5}),
    ),
    Fixture(
        "double_free",
        """
var p;
p = malloc{a, b};
free(p);
free(p);
""",
        ({}, {"p": 1}, {"p": 2}),
        expect_error=True,
    ),
]


def write_fixture_files() -> None:
    FIXTURE_DIR.mkdir(exist_ok=True)
    for f in FIXTURES:
        f.path.write_text(f.source.lstrip())


def by_name(name: str) -> Fixture:
    for f in FIXTURES:
        if f.name == name:
            return f
    raise KeyError(name)
