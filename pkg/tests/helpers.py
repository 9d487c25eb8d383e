"""Hand-built placed scenes for unit tests."""
from __future__ import annotations

import numpy as np

from malevic import scenegen


def make_scene(
    specs: list[tuple[str, str, int]],
    task_name: str = "POS",
    scene_id: str = "scene-test",
    dims_seed: int = 0,
) -> scenegen.Scene:
    """Build a placed scene from (shape, color, size_label) triples.

    Objects are laid out on a fixed grid with generous spacing, so bounding
    boxes never conflict for any label on the ladder.  Dimensions come from
    the real solver with a seeded rng, which keeps scenes deterministic.
    """
    if len(specs) > 9:
        raise ValueError("grid layout supports at most 9 objects")
    rng = np.random.default_rng(dims_seed)
    centers = [
        (250 + 490 * (i % 3), 250 + 490 * (i // 3)) for i in range(len(specs))
    ]
    objects = []
    for obj_id, ((shape, color, label), center) in enumerate(zip(specs, centers)):
        area = scenegen.label_area(label)
        dims = scenegen.solve_dimensions(shape, area, rng)
        objects.append(
            scenegen.SceneObject(
                id=obj_id,
                shape=shape,
                color=color,
                size_label=label,
                pixel_area=area,
                dims=dims,
                center=center,
                bbox=scenegen.bbox_for(shape, dims, center),
            )
        )
    return scenegen.Scene(
        scene_id=scene_id,
        canvas_size=scenegen.CANVAS_SIZE,
        task=task_name,
        rng_seed=0,
        objects=objects,
    )
