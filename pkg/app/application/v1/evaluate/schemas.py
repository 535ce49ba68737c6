from typing import List, Optional

from pydantic import BaseModel


class EvaluationReport(BaseModel):
    eer: float
    threshold: float
    min_tdcf: Optional[float] = None
    tdcf_threshold: Optional[float] = None
    trials: int
    unmatched: int

    def lines(self) -> List[str]:
        """key=value lines; the t-DCF lines appear only with a cost model"""
        out = [f"eer={self.eer:.6f}", f"threshold={self.threshold:.6f}"]
        if self.min_tdcf is not None:
            out.append(f"min_tdcf={self.min_tdcf:.6f}")
            out.append(f"tdcf_threshold={self.tdcf_threshold:.6f}")
        out.append(f"trials={self.trials}")
        out.append(f"unmatched={self.unmatched}")
        return out
