#!/usr/bin/env python3
from __future__ import annotations

import csv
import json
import os
from typing import Any, Iterable, Sequence

import numpy as np

from blocktri import BlockTriMatrix
from overlaps import OrthogonalityReport, OverlapTable
from params import ModelParams, encode_complex
from spectral import EigenBasis

JSONPayload = dict[str, Any]


def encode_matrix(matrix: np.ndarray) -> list[list[list[float]]]:
    return [[encode_complex(z) for z in row] for row in matrix]


def matrix_payload(matrix: np.ndarray, params: ModelParams) -> JSONPayload:
    """{"dim", "entries" (row-major [re, im]), "params"}"""
    return {
        "dim": int(matrix.shape[0]),
        "entries": [encode_complex(z) for z in matrix.ravel()],
        "params": params.to_dict(),
    }


def basis_payload(basis: EigenBasis) -> list[JSONPayload]:
    return [
        {
            "epsilons": list(idx.epsilons),
            "level": idx.level,
            "rank": idx.rank,
            "eigenvalue": encode_complex(value),
            "vector": [encode_complex(z) for z in vector],
        }
        for idx, vector, value in basis
    ]


def blocks_payload(blocks: BlockTriMatrix) -> list[JSONPayload]:
    return [
        {
            "n": n,
            "A": encode_matrix(blocks.block("a", n)),
            "B": encode_matrix(blocks.block("b", n)),
            "C": encode_matrix(blocks.block("c", n)),
        }
        for n in range(blocks.N + 1)
    ]


OVERLAP_HEADER = ["n", "i", "k", "s", "re_F", "im_F"]


def overlap_rows(table: OverlapTable) -> list[list[Any]]:
    return [[n, i, k, s, value.real, value.imag] for n, i, k, s, value in table.rows()]


def overlaps_payload(table: OverlapTable) -> JSONPayload:
    levels = range(table.N + 1)
    return {
        "N": table.N,
        "lambda_tilde": [encode_complex(z) for z in table.lambda_tilde],
        "U": [{"k": k, "s": s, "value": encode_complex(table.u(k, s))}
              for s in levels for k in range(1, len(table.U[s]) + 1)],
        "weights": [{"k": k, "s": s, "value": encode_complex(table.weight(k, s))}
                    for s in levels for k in range(1, len(table.weights[s]) + 1)],
        "F": [{"n": n, "i": i, "k": k, "s": s, "value": encode_complex(value)}
              for n, i, k, s, value in table.rows()],
    }


def orthogonality_payload(report: OrthogonalityReport) -> JSONPayload:
    return {
        "weights": [encode_complex(w) for w in report.weights],
        "gram": encode_matrix(report.gram),
        "off_diagonal": report.off_diagonal,
        "diagonal_deviation": report.diagonal_deviation,
        "weight_imaginary": report.weight_imaginary,
    }


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent and not os.path.exists(parent):
        os.makedirs(parent, exist_ok=True)


def write_json(payload: Any, path: str) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: str) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
