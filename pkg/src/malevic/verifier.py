"""Sentence parsing and truth evaluation against symbolic scenes.

This is the oracle side of the pipeline: it does not trust any recorded
labels, only the scene geometry, the sentence text, and a choice of k.
The grammar is an exact match over the closed template vocabulary — the
sentence space is finite, so parsing is strict token checking, and
parse(realize(fields)) == fields is a tested identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import langgen, scenegen, semantics

_ARTICLES = ("a", "the")
_HEADS = scenegen.SHAPES + (langgen.OBJECT_HEAD,)


class ParseError(ValueError):
    """Sentence deviates from the template; carries the failing position."""

    def __init__(self, message: str, token_index: int, char_offset: int):
        super().__init__(f"{message} (token {token_index}, char {char_offset})")
        self.token_index = token_index
        self.char_offset = char_offset


class ResolutionError(ValueError):
    pass


class NoReferentError(ResolutionError):
    pass


class AmbiguousReferentError(ResolutionError):
    pass


@dataclass(frozen=True)
class ParsedQuery:
    color: str
    shape_mention: str
    head: str  # a shape word or "object"
    adjective: str
    form: str  # "positive" | "superlative"


def parse_sentence(text: str) -> ParsedQuery:
    """Parse 'The {color} {shape} is {a|the} {adjective} {head}' exactly.

    Article and adjective must agree: "a" takes big/small, "the" takes
    biggest/smallest.  Any other token, casing, or spacing is an error
    reporting the offending token and its character offset.
    """
    tokens = text.split(" ")
    offsets = []
    pos = 0
    for tok in tokens:
        offsets.append(pos)
        pos += len(tok) + 1

    def fail(idx: int, message: str):
        offset = offsets[idx] if idx < len(offsets) else len(text)
        raise ParseError(message, token_index=idx, char_offset=offset)

    if len(tokens) != 7:
        fail(min(7, len(tokens)), f"expected 7 tokens, got {len(tokens)}")
    if "" in tokens:
        fail(tokens.index(""), "empty token (check spacing)")
    if tokens[0] != "The":
        fail(0, f"expected 'The', got {tokens[0]!r}")
    if tokens[1] not in scenegen.COLORS:
        fail(1, f"unknown color {tokens[1]!r}")
    if tokens[2] not in scenegen.SHAPES:
        fail(2, f"unknown shape {tokens[2]!r}")
    if tokens[3] != "is":
        fail(3, f"expected 'is', got {tokens[3]!r}")
    if tokens[4] not in _ARTICLES:
        fail(4, f"expected 'a' or 'the', got {tokens[4]!r}")
    if tokens[4] == "a":
        if tokens[5] not in langgen.POSITIVE_ADJECTIVES:
            fail(5, f"article 'a' requires big/small, got {tokens[5]!r}")
        form = "positive"
    else:
        if tokens[5] not in langgen.SUPERLATIVE_ADJECTIVES:
            fail(5, f"article 'the' requires biggest/smallest, got {tokens[5]!r}")
        form = "superlative"
    if tokens[6] not in _HEADS:
        fail(6, f"unknown head noun {tokens[6]!r}")

    return ParsedQuery(
        color=tokens[1],
        shape_mention=tokens[2],
        head=tokens[6],
        adjective=tokens[5],
        form=form,
    )


def _is_homogeneous(scene: scenegen.Scene) -> bool:
    return len({obj.shape for obj in scene.objects}) == 1


def resolve_target(scene: scenegen.Scene, query: ParsedQuery) -> int:
    """Find the unique object the query refers to.

    In shape-homogeneous scenes color alone identifies the referent; in
    mixed scenes the (color, shape) pair does.
    """
    if _is_homogeneous(scene):
        matches = [o for o in scene.objects if o.color == query.color]
        descr = f"color {query.color!r}"
    else:
        matches = [
            o
            for o in scene.objects
            if o.color == query.color and o.shape == query.shape_mention
        ]
        descr = f"{query.color} {query.shape_mention}"
    if not matches:
        raise NoReferentError(f"no object matching {descr} in scene {scene.scene_id}")
    if len(matches) > 1:
        raise AmbiguousReferentError(
            f"{len(matches)} objects match {descr} in scene {scene.scene_id}"
        )
    return matches[0].id


def reference_set_for_query(
    scene: scenegen.Scene, query: ParsedQuery
) -> semantics.ReferenceSet:
    """Comparison class implied by the head noun.

    Head "object" always means the whole scene; so does any head in a
    shape-homogeneous scene (where the restriction is vacuous).  Otherwise
    the head restricts to its shape.
    """
    if query.head == langgen.OBJECT_HEAD or _is_homogeneous(scene):
        return semantics.whole_scene(scene)
    return semantics.restrict(scene, query.head)


def _resolve_k(
    k_mode: str,
    recorded_k: float | None,
    seed: int | None,
    threshold_config: semantics.ThresholdConfig | None,
) -> semantics.VagueK:
    if k_mode == "recorded":
        if recorded_k is None:
            raise ValueError("k_mode='recorded' requires a recorded k value")
        return semantics.VagueK(recorded_k, source="sampled")
    if k_mode == "sharp":
        return semantics.sharp_k()
    if k_mode == "resample":
        rng = np.random.default_rng(seed)
        return semantics.sample_k(threshold_config or semantics.ThresholdConfig(), rng)
    raise ValueError(f"unknown k_mode {k_mode!r}")


def evaluate(
    scene: scenegen.Scene,
    query: ParsedQuery,
    k_mode: str = "recorded",
    *,
    recorded_k: float | None = None,
    seed: int | None = None,
    threshold_config: semantics.ThresholdConfig | None = None,
) -> bool:
    """Decide whether the query is true of the scene.

    Superlatives are precise min/max over the whole scene and ignore k.
    Positives judge the resolved target against its reference set under
    the k chosen by k_mode ("recorded" | "sharp" | "resample").
    """
    truth, _ = evaluate_with_judgment(
        scene,
        query,
        k_mode,
        recorded_k=recorded_k,
        seed=seed,
        threshold_config=threshold_config,
    )
    return truth


def evaluate_with_judgment(
    scene: scenegen.Scene,
    query: ParsedQuery,
    k_mode: str = "recorded",
    *,
    recorded_k: float | None = None,
    seed: int | None = None,
    threshold_config: semantics.ThresholdConfig | None = None,
) -> tuple[bool, semantics.SizeJudgment | None]:
    """Like evaluate(), also returning the SizeJudgment for positive queries."""
    target = resolve_target(scene, query)
    if query.form == "superlative":
        biggest, smallest = semantics.superlative(semantics.whole_scene(scene))
        wanted = biggest if query.adjective == "biggest" else smallest
        return target == wanted, None
    ref = reference_set_for_query(scene, query)
    k = _resolve_k(k_mode, recorded_k, seed, threshold_config)
    judgment = semantics.judge(target, ref, k)
    truth = judgment.is_big if query.adjective == "big" else not judgment.is_big
    return truth, judgment
