"""合成的电影票知识库：每行一场可订的放映"""

import json
import logging
import os
from typing import Dict, List, Mapping, Optional

import numpy as np

from src.dialogue.errors import GoalGenerationError
from src.dialogue.ontology import (
    INFORMABLE_SLOTS,
    SLOT_CITY,
    SLOT_DATE,
    SLOT_DISTANCE,
    SLOT_MOVIENAME,
    SLOT_NUMBER_OF_PEOPLE,
    SLOT_PRICE,
    SLOT_STARTTIME,
    SLOT_STATE,
    SLOT_THEATER,
    SLOT_THEATER_CHAIN,
    SLOT_VIDEO_FORMAT,
    SLOT_ZIP,
)

logger = logging.getLogger(__name__)

MOVIES = (
    "zootopia",
    "deadpool",
    "the_witch",
    "kung_fu_panda_3",
    "race",
    "risen",
    "eddie_the_eagle",
    "london_has_fallen",
)
CITIES = {
    "seattle": ("wa", "98101"),
    "portland": ("or", "97201"),
    "san_francisco": ("ca", "94103"),
    "los_angeles": ("ca", "90012"),
    "boston": ("ma", "02116"),
}
DATES = ("friday", "saturday", "sunday", "tomorrow")
THEATERS = {
    "regal_meridian_16": "regal",
    "regal_thornton_place": "regal",
    "amc_pacific_place": "amc",
    "amc_lowes_oak_tree": "amc",
    "cinemark_century": "cinemark",
    "cinemark_lincoln_square": "cinemark",
}
PARTY_SIZES = ("1", "2", "3", "4", "5")
START_TIMES = ("1:00pm", "4:30pm", "7:00pm", "9:30pm", "11:00pm")
VIDEO_FORMATS = {"2d": "12", "3d": "15", "imax": "18"}
DISTANCES = ("near_downtown", "within_5_miles", "walking_distance")


class KnowledgeBase:
    def __init__(self, rows: List[Dict[str, str]], seed: Optional[int] = None):
        self.rows = [dict(row) for row in rows]
        self.seed = seed
        self._validate()
        self.vocab: Dict[str, List[str]] = {}
        for slot in INFORMABLE_SLOTS:
            seen: List[str] = []
            for row in self.rows:
                if row[slot] not in seen:
                    seen.append(row[slot])
            self.vocab[slot] = seen

    def _validate(self):
        if not self.rows:
            raise GoalGenerationError("knowledge base has no rows")
        for idx, row in enumerate(self.rows):
            missing = [slot for slot in INFORMABLE_SLOTS if not row.get(slot)]
            if missing:
                raise GoalGenerationError(f"knowledge base row {idx} lacks values for {missing}")

    @classmethod
    def generate(cls, seed: int = 0, n_rows: int = 100) -> "KnowledgeBase":
        rng = np.random.default_rng(seed)
        cities = list(CITIES)
        theaters = list(THEATERS)
        formats = list(VIDEO_FORMATS)
        rows = []
        for _ in range(n_rows):
            city = cities[rng.integers(len(cities))]
            theater = theaters[rng.integers(len(theaters))]
            video_format = formats[rng.integers(len(formats))]
            state, zip_code = CITIES[city]
            rows.append({
                SLOT_MOVIENAME: MOVIES[rng.integers(len(MOVIES))],
                SLOT_CITY: city,
                SLOT_DATE: DATES[rng.integers(len(DATES))],
                SLOT_THEATER: theater,
                SLOT_NUMBER_OF_PEOPLE: PARTY_SIZES[rng.integers(len(PARTY_SIZES))],
                SLOT_STARTTIME: START_TIMES[rng.integers(len(START_TIMES))],
                SLOT_VIDEO_FORMAT: video_format,
                SLOT_THEATER_CHAIN: THEATERS[theater],
                SLOT_PRICE: VIDEO_FORMATS[video_format],
                SLOT_STATE: state,
                SLOT_ZIP: zip_code,
                SLOT_DISTANCE: DISTANCES[rng.integers(len(DISTANCES))],
            })
        logger.info(f"已生成合成知识库: {n_rows} 行, seed={seed}")
        return cls(rows, seed=seed)

    def __len__(self) -> int:
        return len(self.rows)

    def find_rows(self, constraints: Mapping[str, str]) -> List[Dict[str, str]]:
        """返回满足约束的全部行；非知识库列的槽位被忽略"""
        relevant = {k: v for k, v in constraints.items() if k in INFORMABLE_SLOTS}
        return [row for row in self.rows if all(row[k] == v for k, v in relevant.items())]

    def first_consistent(self, constraints: Mapping[str, str]) -> Optional[Dict[str, str]]:
        relevant = {k: v for k, v in constraints.items() if k in INFORMABLE_SLOTS}
        for row in self.rows:
            if all(row[k] == v for k, v in relevant.items()):
                return row
        return None

    def value_for(self, slot: str, agreed: Mapping[str, str]) -> str:
        """取第一条与已商定取值一致的行的 slot 值，没有时退回第一行"""
        row = self.first_consistent(agreed)
        if row is None:
            row = self.rows[0]
        return row[slot]

    def in_vocab(self, slot: str, value: str) -> bool:
        return value in self.vocab.get(slot, [])

    def to_dict(self) -> Dict[str, object]:
        return {"seed": self.seed, "columns": list(INFORMABLE_SLOTS), "rows": self.rows}

    def save(self, filepath: str):
        os.makedirs(os.path.dirname(filepath) or ".", exist_ok=True)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2)

    @classmethod
    def load(cls, filepath: str) -> "KnowledgeBase":
        with open(filepath, "r", encoding="utf-8") as f:
            payload = json.load(f)
        return cls(payload.get("rows", []), seed=payload.get("seed"))
