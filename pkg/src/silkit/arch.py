"""Architectures: port domains plus interaction sets, and their algebra.

An architecture is a pair <D, I> of a finite port domain and a finite set
of interactions (finite port sets), each of which intersects the domain.
Interactions contained in the domain are closed, the others open.

Ports are interned process-wide and port sets are stored as integer bit
masks over the interning order, so the composition algebra runs on machine
words while equality, hashing and printing stay purely name-based.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import InvalidArchitecture, NotDisjoint, ParseError

_PORT_RE = re.compile(r"[A-Za-z0-9_@]+\Z")

_intern_lock = threading.Lock()
_port_names: list[str] = []
_port_index: dict[str, int] = {}


def port_id(name: str) -> int:
    """Intern a port name, returning its process-wide bit index."""
    idx = _port_index.get(name)
    if idx is not None:
        return idx
    if not _PORT_RE.match(name):
        raise InvalidArchitecture("invalid port name: %r" % name)
    with _intern_lock:
        idx = _port_index.get(name)
        if idx is None:
            idx = len(_port_names)
            _port_names.append(name)
            _port_index[name] = idx
    return idx


def mask_of(names: Iterable[str]) -> int:
    m = 0
    for n in names:
        m |= 1 << port_id(n)
    return m


def names_of(mask: int) -> frozenset[str]:
    out = []
    while mask:
        low = mask & -mask
        out.append(_port_names[low.bit_length() - 1])
        mask ^= low
    return frozenset(out)


def sorted_names(mask: int) -> tuple[str, ...]:
    return tuple(sorted(names_of(mask)))


@dataclass(frozen=True)
class Architecture:
    """Immutable architecture value; equality and hashing are structural."""

    dom_mask: int
    inter_masks: frozenset[int]

    def __post_init__(self):
        for im in self.inter_masks:
            if im & self.dom_mask == 0:
                raise InvalidArchitecture(
                    "interaction {%s} does not intersect domain {%s}"
                    % (",".join(sorted_names(im)), ",".join(sorted_names(self.dom_mask)))
                )

    @staticmethod
    def make(domain: Iterable[str], interactions: Iterable[Iterable[str]]) -> "Architecture":
        return Architecture(mask_of(domain), frozenset(mask_of(i) for i in interactions))

    @property
    def domain(self) -> frozenset[str]:
        return names_of(self.dom_mask)

    @property
    def interactions(self) -> frozenset[frozenset[str]]:
        return frozenset(names_of(im) for im in self.inter_masks)

    def sort_key(self):
        """Deterministic, name-based ordering key (interning-order free)."""
        dom = sorted_names(self.dom_mask)
        inters = sorted((len(sorted_names(im)), sorted_names(im)) for im in self.inter_masks)
        return (len(dom), dom, len(inters), inters)

    def __str__(self) -> str:
        return print_architecture(self)

    def __repr__(self) -> str:
        return "Architecture(%s)" % print_architecture(self)


EMPTY = Architecture(0, frozenset())


def compose(a1: Architecture, a2: Architecture) -> Architecture:
    """Disjoint composition: keeps matched interactions and interactions
    untouched by the other domain."""
    if a1.dom_mask & a2.dom_mask:
        both = names_of(a1.dom_mask & a2.dom_mask)
        raise NotDisjoint("domains overlap on {%s}" % ",".join(sorted(both)))
    i1, i2 = a1.inter_masks, a2.inter_masks
    kept = set(i1 & i2)
    kept.update(im for im in i1 if im & a2.dom_mask == 0)
    kept.update(im for im in i2 if im & a1.dom_mask == 0)
    return Architecture(a1.dom_mask | a2.dom_mask, frozenset(kept))


def is_closed(a: Architecture) -> bool:
    return all(im & ~a.dom_mask == 0 for im in a.inter_masks)


def closure_of(a: Architecture) -> Architecture:
    """The unique architecture c with closes(c, a): drop open interactions."""
    return Architecture(a.dom_mask, frozenset(im for im in a.inter_masks if im & ~a.dom_mask == 0))


def closes(a1: Architecture, a2: Architecture) -> bool:
    """True iff a1 is the closure of a2 (same domain, closed restriction)."""
    if a1.dom_mask != a2.dom_mask:
        return False
    return a1.inter_masks == frozenset(im for im in a2.inter_masks if im & ~a1.dom_mask == 0)


# ---------------------------------------------------------------------------
# Textual format:  dom {p,q} inter { {p,q}; {q,r} }


def print_architecture(a: Architecture) -> str:
    dom = ",".join(sorted_names(a.dom_mask))
    inters = sorted(sorted_names(im) for im in a.inter_masks)
    body = "; ".join("{%s}" % ",".join(i) for i in inters)
    return "dom {%s} inter { %s }" % (dom, body) if body else "dom {%s} inter { }" % dom


_ARCH_TOKEN = re.compile(r"\s*([A-Za-z0-9_@]+|[{},;])")


def _arch_tokens(text: str) -> Iterator[tuple[str, int]]:
    pos = 0
    while pos < len(text):
        m = _ARCH_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                return
            raise ParseError("unexpected character %r in architecture" % text[pos], 1, pos + 1)
        yield m.group(1), m.start(1)
        pos = m.end()


def parse_architecture(text: str) -> Architecture:
    toks = list(_arch_tokens(text))
    pos = 0

    def peek():
        return toks[pos][0] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        if pos >= len(toks):
            raise ParseError("unexpected end of architecture text", 1, len(text))
        tok, where = toks[pos]
        if expected is not None and tok != expected:
            raise ParseError("expected %r, found %r" % (expected, tok), 1, where + 1)
        pos += 1
        return tok

    def portlist(closer):
        ports = []
        if peek() != closer:
            ports.append(take())
            while peek() == ",":
                take(",")
                ports.append(take())
        take(closer)
        return ports

    take("dom")
    take("{")
    domain = portlist("}")
    take("inter")
    take("{")
    inters = []
    if peek() != "}":
        while True:
            take("{")
            inters.append(portlist("}"))
            if peek() == ";":
                take(";")
            else:
                break
    take("}")
    if pos != len(toks):
        raise ParseError("trailing input after architecture", 1, toks[pos][1] + 1)
    return Architecture.make(domain, inters)
