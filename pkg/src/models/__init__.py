# 基準模型與檔案
