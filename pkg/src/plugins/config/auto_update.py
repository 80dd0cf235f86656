import os
import shutil
from pathlib import Path
from typing import Optional

import tomlkit
from loguru import logger


def update_config(config_path: Optional[Path] = None, template_path: Optional[Path] = None) -> Path:
    """把旧配置中的值合并进最新模板，保留模板的注释和格式，version 以模板为准"""
    root_dir = Path(__file__).resolve().parents[3]
    template_path = Path(template_path or root_dir / "template" / "bench_config_template.toml")
    config_path = Path(config_path or root_dir / "config" / "bench_config.toml")

    old_config = {}
    if config_path.exists():
        with open(config_path, "r", encoding="utf-8") as f:
            old_config = tomlkit.load(f)
        os.remove(config_path)

    config_path.parent.mkdir(parents=True, exist_ok=True)
    shutil.copy2(template_path, config_path)

    with open(config_path, "r", encoding="utf-8") as f:
        new_config = tomlkit.load(f)

    def update_dict(target, source):
        for key, value in source.items():
            if key == "version":
                continue
            if key in target:
                if isinstance(value, dict) and isinstance(target[key], (dict, tomlkit.items.Table)):
                    update_dict(target[key], value)
                else:
                    try:
                        target[key] = tomlkit.item(value)
                    except (TypeError, ValueError):
                        target[key] = value
            else:
                # 模板里没有的键照样保留
                target[key] = value

    update_dict(new_config, old_config)

    with open(config_path, "w", encoding="utf-8") as f:
        f.write(tomlkit.dumps(new_config))
    logger.success(f"配置文件已更新: {config_path}")
    return config_path


if __name__ == "__main__":
    update_config()
