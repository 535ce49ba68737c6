from typing import List, Optional

from pydantic import BaseModel


class VariantResult(BaseModel):
    variant: str
    params: int
    dev_eer: float
    min_tdcf: Optional[float] = None
    run_dir: str


class SweepOutcome(BaseModel):
    comparison: str
    results: List[VariantResult]
