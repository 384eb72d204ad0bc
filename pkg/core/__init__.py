"""核心业务包：图表示、哈希、基核、哈希图核、oracle、数据生成与评估。"""
