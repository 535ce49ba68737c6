from pydantic import BaseModel


class SynthOutcome(BaseModel):
    out_dir: str
    train_manifest: str
    dev_manifest: str
    train_protocol: str
    dev_protocol: str
    utterances: int
