"""Merchant NPC engine: appraisal, negotiation, evaluation, auditing."""

__version__ = "0.1.0"
