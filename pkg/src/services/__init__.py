"""Services for ingest, text extraction, circuits, flows, traffic and scoring."""

from src.services.pipeline import AssessmentPipeline, assess_network

__all__ = [
    "AssessmentPipeline",
    "assess_network",
]
