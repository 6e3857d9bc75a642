"""CLI and HTTP/WebSocket service over recordings, pipelines, and sessions."""
