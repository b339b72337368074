"""工具模块：异常、文件格式、线程池、会话读写与流水线执行器"""

# 子模块按需导入：exceptions 被所有包依赖，这里不能反向导入 pipeline_runner

__all__ = ['exceptions', 'file_formats', 'parallel', 'session_io', 'pipeline_runner']
