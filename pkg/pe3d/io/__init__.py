# 파일 입출력 패키지
from pe3d.io.binary import read_depth_map, read_pe_grid, write_depth_map, write_pe_grid
from pe3d.io.exports import read_csv, read_similarity_csv, write_csv, write_json, write_pgm, write_similarity_csv
