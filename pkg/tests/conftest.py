"""Shared fixtures: the base configuration document and common objects."""

from __future__ import annotations

import pytest

from synthline.feature_model import default_feature_model, validate_selection


def base_document(**overrides):
    """The base generation configuration (two-label security task)."""
    doc = {
        "llm_model": "gpt-4.1-nano",
        "temperature": 1.0,
        "top_p": 1.0,
        "specification_level": ["High-Level", "Detailed"],
        "requirement_source": [
            "End Users",
            "Business Managers",
            "Development Team",
            "Regulatory Bodies",
        ],
        "specification_format": ["NL", "Constrained NL", "User Story"],
        "domain": ["Telecommunications", "Healthcare", "Enterprise Data Management"],
        "language": ["English"],
        "labels": [
            {
                "label_name": "Security",
                "label_description": "The requirement contributes to a security objective.",
            },
            {
                "label_name": "Non-Security",
                "label_description": "The requirement does not address security concerns.",
            },
        ],
        "output_format": "CSV",
        "subset_size": 500,
    }
    doc.update(overrides)
    return doc


@pytest.fixture(scope="session")
def model():
    return default_feature_model()


@pytest.fixture
def base_selection(model):
    return validate_selection(model, base_document())


@pytest.fixture
def small_selection(model):
    """2 labels x 4 atomic configurations; cheap enough for pipeline tests."""
    doc = base_document(
        specification_level=["High-Level"],
        requirement_source=["End Users", "Development Team"],
        specification_format=["NL", "User Story"],
        domain=["Healthcare"],
        subset_size=12,
        samples_per_prompt=20,
    )
    return validate_selection(model, doc)
