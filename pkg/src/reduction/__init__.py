# 模型降階
