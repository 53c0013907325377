"""Смешивание сгенерированного изображения со входом в пространстве пикселей."""

import numpy as np

from ..exceptions import CompositeShapeError


def composite(generated: np.ndarray, input_image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    mask * generated + (1 - mask) * input.

    Пиксели вне маски копируются из входа побитово.

    Raises:
        CompositeShapeError: Формы различаются
    """
    if not generated.shape == input_image.shape == mask.shape:
        raise CompositeShapeError(
            "Формы сгенерированного изображения, входа и маски различаются",
            details={
                "generated": list(generated.shape),
                "input": list(input_image.shape),
                "mask": list(mask.shape),
            },
        )
    return np.where(mask.astype(bool), generated, input_image).astype(input_image.dtype)
