"""Disk embeddings of directed acyclic graphs."""
