from typing import List

from pydantic import BaseModel

from app.domain.bench.entity import RtfRecord


class BenchOutcome(BaseModel):
    csv: str
    svg: str
    records: List[RtfRecord]
