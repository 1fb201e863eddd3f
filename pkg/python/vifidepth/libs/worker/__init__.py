from .row_chunk_pool import map_row_chunks, row_bands

__all__ = ["map_row_chunks", "row_bands"]
