import os
import shutil
import sys

from dotenv import load_dotenv
from loguru import logger

from src.common.logger import load_logger
from src.plugins.pipeline.cli import main


def init_config():
    # 初次启动检测
    if not os.path.exists("config/bench_config.toml"):
        logger.warning("检测到bench_config.toml不存在，正在从模板复制")

        if not os.path.exists("config"):
            os.makedirs("config")
            logger.info("创建config目录")

        shutil.copy("template/bench_config_template.toml", "config/bench_config.toml")
        logger.info("复制完成，可按需修改config/bench_config.toml")


def init_env():
    # 初始化.env 默认ENVIRONMENT=prod
    if not os.path.exists(".env"):
        with open(".env", "w") as f:
            f.write("ENVIRONMENT=prod")

    if os.path.exists(".env"):
        load_dotenv(".env", override=True)
        logger.success("成功加载基础环境变量配置")


def load_env():
    # 使用闭包实现对加载器的横向扩展，避免大量重复判断
    def prod():
        logger.success("加载生产环境变量配置")
        load_dotenv(".env.prod", override=True)

    def dev():
        logger.success("加载开发环境变量配置")
        load_dotenv(".env.dev", override=True)

    fn_map = {
        "prod": prod,
        "dev": dev,
    }

    env = os.getenv("ENVIRONMENT")
    logger.debug(f"[load_env] 当前的 ENVIRONMENT 变量值：{env}")

    if env in fn_map:
        fn_map[env]()
    elif env and os.path.exists(f".env.{env}"):
        logger.success(f"加载{env}环境变量配置")
        load_dotenv(f".env.{env}", override=True)
    else:
        logger.warning(f"ENVIRONMENT={env} 没有对应的 .env.{env}，只使用基础环境变量")


if __name__ == "__main__":
    load_logger()
    init_config()
    init_env()
    load_env()
    load_logger()
    sys.exit(main(sys.argv[1:]))
