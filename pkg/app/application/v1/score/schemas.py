from pydantic import BaseModel


class ScoreOutcome(BaseModel):
    scores: str
    total: int
    failed: int

    @property
    def partial(self) -> bool:
        return self.failed > 0
