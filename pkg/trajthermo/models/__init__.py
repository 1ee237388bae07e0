"""
Pydantic models for configuration documents and run summaries.
"""
