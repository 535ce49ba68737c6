from pydantic import BaseModel, Field

DEFAULT_DURATIONS = (2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)


class RtfRecord(BaseModel):
    system: str
    duration_s: float = Field(..., gt=0)
    frames: int = Field(..., ge=0)
    wall_time_s: float = Field(..., ge=0, description="Mean over timed runs")
    rtf: float = Field(..., gt=0)
    runs: int = Field(..., ge=1)
    std: float = Field(..., ge=0, description="Seconds, over timed runs")
